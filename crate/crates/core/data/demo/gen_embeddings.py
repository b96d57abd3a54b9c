#!/usr/bin/env python3
"""Generate the demo word-vector file.

Vectors are synthetic: each word points mostly along one or two topic axes
plus seeded Gaussian noise. Content words get large norms, function words
small ones, so norm-proportional word masses behave as they would with
trained vectors. Re-running produces byte-identical output.
"""
import math
import random
import sys

DIM = 32
AXES = [
    "price", "time", "parking", "access", "food", "overview", "social",
    "affirm", "negate", "travel", "function", "sight",
    "spot_harbor", "spot_sakura", "spot_castle", "spot_lantern", "spot_art", "spot_hilltop",
]
AXIS = {name: i for i, name in enumerate(AXES)}

# word -> ({axis: weight}, norm)
CONTENT = 3.0
FUNCTION = 0.6

GROUPS = {
    "price": ["fee", "fees", "entrance", "admission", "cost", "costs", "price", "prices",
              "ticket", "tickets", "yen", "pay", "expensive", "cheap", "charge", "money", "free"],
    "time": ["hours", "hour", "open", "opens", "opening", "close", "closes", "closing", "time",
             "times", "when", "operation", "schedule", "until", "early", "late", "morning",
             "evening", "today", "weekend"],
    "parking": ["park", "parking", "lot", "parked", "space", "garage"],
    "access": ["station", "get", "reach", "access", "subway", "rail", "railway", "line", "bus",
               "walk", "walking", "route", "directions", "far", "way", "go", "getting",
               "minutes", "nearest", "long", "take"],
    "food": ["restaurant", "restaurants", "eat", "eating", "food", "lunch", "dinner", "cafe",
             "hungry", "meal", "nearby", "around"],
    "overview": ["about", "tell", "describe", "kind", "famous", "see", "overview", "special",
                 "highlights", "interesting", "recommend", "like"],
    "social": ["hello", "hi", "thanks", "thank", "nice", "meet", "name", "weather", "cats"],
    "affirm": ["ok", "okay", "yes", "sure", "fine", "alright", "yeah"],
    "negate": ["no", "nope", "not"],
    "sight": ["view", "views", "beautiful", "history", "historic", "fish", "flowers", "cherry",
              "trees", "sea", "ocean", "sunset", "lanterns", "shops", "quiet", "exhibits",
              "paintings", "festival"],
}

# Words straddling two topics.
MIXED = {
    "car": ({"parking": 0.8, "access": 0.45}, CONTENT),
    "cars": ({"parking": 0.8, "access": 0.45}, CONTENT),
    "drive": ({"parking": 0.7, "access": 0.55}, CONTENT),
    "driving": ({"parking": 0.7, "access": 0.55}, CONTENT),
    "vehicle": ({"parking": 0.8, "access": 0.4}, CONTENT),
    "train": ({"access": 0.9, "travel": 0.3}, CONTENT),
    "much": ({"price": 0.8, "function": 0.4}, 1.4),
    "available": ({"parking": 0.3, "function": 0.6}, 1.0),
    "place": ({"overview": 0.6, "sight": 0.4}, 1.6),
    "good": ({"overview": 0.5, "food": 0.3}, 1.2),
    "visit": ({"travel": 0.9}, 2.0),
    "trip": ({"travel": 0.9}, 2.0),
}

SPOTS = {
    "spot_harbor": ["minato", "harbor", "aquarium"],
    "spot_sakura": ["shirakawa", "sakura", "garden"],
    "spot_castle": ["takamine", "castle", "ruins"],
    "spot_lantern": ["hotaru", "lantern", "street"],
    "spot_art": ["aozora", "art", "museum"],
    "spot_hilltop": ["kazami", "hilltop", "shrine"],
}

FUNCTION_WORDS = [
    "can", "i", "my", "there", "is", "the", "a", "an", "are", "of", "to", "do", "does", "you",
    "how", "what", "it", "its", "for", "me", "we", "in", "at", "this", "that", "be", "will",
    "would", "please", "any", "by", "and", "or", "with", "have", "has", "here", "your", "us",
    "our", "should", "could", "where", "which", "one", "some", "from", "on", "im", "if", "was",
    "so", "just", "want", "know", "then", "also", "very", "really", "think", "all", "right",
    "thats", "please", "am", "well", "daijoubu",
]


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def make(rng, weights, norm, noise=0.35):
    v = [rng.gauss(0.0, noise / math.sqrt(DIM)) * math.sqrt(DIM) / 4 for _ in range(DIM)]
    for axis, w in weights.items():
        v[AXIS[axis]] += w
    return [x * norm for x in unit(v)]


def main(out):
    rng = random.Random(20220620)
    entries = {}
    for topic, words in GROUPS.items():
        for w in words:
            entries[w] = make(rng, {topic: 1.0}, CONTENT * rng.uniform(0.85, 1.15))
    for w, (weights, norm) in MIXED.items():
        entries[w] = make(rng, weights, norm)
    for axis, words in SPOTS.items():
        for w in words:
            entries[w] = make(rng, {axis: 1.0, "sight": 0.3}, CONTENT)
    for w in FUNCTION_WORDS:
        if w in entries:
            continue
        entries[w] = make(rng, {"function": 1.0}, FUNCTION * rng.uniform(0.7, 1.3), noise=0.6)
    lines = [f"{len(entries)} {DIM}"]
    for w, v in entries.items():
        lines.append(w + " " + " ".join(f"{x:.6f}" for x in v))
    with open(out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "embeddings.txt")
