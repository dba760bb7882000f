#!/usr/bin/env python3
"""Generates fixtures/news.jsonl: a small synthetic news-categorization dataset.

Twenty users, each with a dominant topic and a secondary topic. History
records precede test records in time. Output is fully determined by SEED.
"""

import json
import random
import sys

SEED = 20240917
BASE_TS = 1_700_000_000

TOPICS = {
    "politics": {
        "entities": ["Senate", "White House", "Congress", "Supreme Court", "Capitol Hill", "Democrats",
                     "Republicans", "Washington"],
        "words": ["vote", "bill", "election", "campaign", "senator", "policy", "lawmakers", "governor",
                  "ballot", "legislation", "president", "debate", "reform", "administration", "voters"],
    },
    "sports": {
        "entities": ["NBA", "Super Bowl", "World Cup", "Olympics", "Yankees", "Lakers", "Premier League"],
        "words": ["game", "season", "coach", "team", "score", "playoffs", "championship", "player",
                  "injury", "tournament", "league", "victory", "quarterback", "stadium", "fans"],
    },
    "business": {
        "entities": ["Wall Street", "Federal Reserve", "Amazon", "Tesla", "Dow Jones", "Silicon Valley"],
        "words": ["market", "stocks", "earnings", "investors", "profit", "economy", "shares", "revenue",
                  "startup", "merger", "inflation", "company", "quarter", "trade", "billion"],
    },
    "travel": {
        "entities": ["Paris", "Hawaii", "Tokyo", "National Park", "Caribbean", "Airbnb"],
        "words": ["flight", "hotel", "vacation", "beach", "destination", "trip", "airport", "tourists",
                  "cruise", "passport", "itinerary", "resort", "luggage", "journey", "island"],
    },
    "women": {
        "entities": ["Women's March", "Planned Parenthood", "Title IX", "Teen Vogue", "MeToo"],
        "words": ["feminist", "equality", "mothers", "harassment", "empowerment", "gender", "activists",
                  "sisterhood", "protest", "daughters", "workplace", "rights", "leaders", "pay", "march"],
    },
    "entertainment": {
        "entities": ["Hollywood", "Netflix", "Oscars", "Grammys", "Broadway", "Disney"],
        "words": ["movie", "album", "actor", "premiere", "celebrity", "series", "trailer", "singer",
                  "festival", "director", "sequel", "concert", "episode", "award", "studio"],
    },
}

LABELS = sorted(TOPICS)
FILLER = ["today", "report", "new", "week", "after", "says", "latest", "amid", "plans", "big"]


def sentence(rng, topic, n_words):
    t = TOPICS[topic]
    words = [rng.choice(t["words"]) for _ in range(n_words)]
    words += [rng.choice(FILLER) for _ in range(2)]
    rng.shuffle(words)
    return rng.choice(t["entities"]) + " " + " ".join(words)


def record(rng, user, topic, ts, split):
    title = sentence(rng, topic, 3)
    text = sentence(rng, topic, 6) + ". " + sentence(rng, topic, 5) + "."
    return {"user_id": user, "title": title, "text": text, "gold": topic, "timestamp": ts, "split": split}


def main(out_path):
    rng = random.Random(SEED)
    rows = []
    for u in range(1, 21):
        user = f"u{u:02d}"
        primary = LABELS[(u - 1) % len(LABELS)]
        secondary = LABELS[(u + 2) % len(LABELS)]
        n_history = 6 + (u * 7) % 9
        ts = BASE_TS + u * 100_000
        for _ in range(n_history):
            topic = primary if rng.random() < 0.75 else secondary
            ts += rng.randint(600, 7200)
            rows.append(record(rng, user, topic, ts, "history"))
        for _ in range(2):
            roll = rng.random()
            topic = primary if roll < 0.6 else (secondary if roll < 0.8 else rng.choice(LABELS))
            ts += rng.randint(600, 7200)
            rows.append(record(rng, user, topic, ts, "test"))
    with open(out_path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures/news.jsonl")
