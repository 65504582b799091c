#!/usr/bin/env python3
"""Regenerates the toy corpus, dictionaries and knowledge base under data/."""

import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"

TOPICS = {
    "phone": ["手机", "电话"],
    "computer": ["电脑", "微机"],
    "car": ["汽车", "轿车"],
    "weather": ["天气", "气候"],
    "bank": ["银行", "钱庄"],
    "doctor": ["医生", "大夫"],
    "teacher": ["老师", "教师"],
    "fruit": ["苹果", "水果"],
}
PREFIXES = ["请问", "我想问", "哪里有", "怎么买", "我想找"]
SUFFIXES = ["吗", "呢", "的价格", "好不好", "怎么样"]

KB = [
    ("手机", "手机.1", ["tool", "communicate"]),
    ("电话", "电话.1", ["tool", "communicate"]),
    ("电话", "电话.2", ["communicate", "information"]),
    ("电脑", "电脑.1", ["computer"]),
    ("微机", "微机.1", ["computer", "small"]),
    ("汽车", "汽车.1", ["vehicle", "land"]),
    ("轿车", "轿车.1", ["vehicle", "land", "human"]),
    ("天气", "天气.1", ["weather"]),
    ("气候", "气候.1", ["weather", "time"]),
    ("银行", "银行.1", ["institution", "finance"]),
    ("钱庄", "钱庄.1", ["institution", "finance", "old"]),
    ("医生", "医生.1", ["human", "medical"]),
    ("大夫", "大夫.1", ["human", "medical"]),
    ("大夫", "大夫.2", ["human", "official"]),
    ("老师", "老师.1", ["human", "education"]),
    ("教师", "教师.1", ["human", "education", "occupation"]),
    ("苹果", "苹果.1", ["computer", "PatternValue", "able", "bring", "SpecificBrand"]),
    ("苹果", "苹果.2", ["fruit"]),
    ("水果", "水果.1", ["fruit", "food"]),
    ("价格", "价格.1", ["value", "money"]),
]

DICT_A = [w for ws in TOPICS.values() for w in ws] + ["请问", "我想", "哪里", "价格", "怎么样"]
DICT_B = [w for ws in TOPICS.values() for w in ws[:1]] + [
    "想问", "里有", "怎么", "好不好", "的价格", "机的", "想找"]

SEMEME_DIM = 16


def sentence(rng, word):
    return rng.choice(PREFIXES) + word + rng.choice(SUFFIXES)


def make_pairs(rng, count):
    names = sorted(TOPICS)
    pairs = []
    for i in range(count):
        t = rng.choice(names)
        if i % 2 == 0:
            a, b = sentence(rng, rng.choice(TOPICS[t])), sentence(rng, rng.choice(TOPICS[t]))
            label = 1
        else:
            u = rng.choice([n for n in names if n != t])
            a, b = sentence(rng, rng.choice(TOPICS[t])), sentence(rng, rng.choice(TOPICS[u]))
            label = 0
        pairs.append(f"{a}\t{b}\t{label}")
    return pairs


def main():
    rng = random.Random(7)
    OUT.mkdir(exist_ok=True)
    (OUT / "train.tsv").write_text("\n".join(make_pairs(rng, 64)) + "\n", encoding="utf-8")
    (OUT / "dev.tsv").write_text("\n".join(make_pairs(rng, 32)) + "\n", encoding="utf-8")
    (OUT / "dict_a.txt").write_text("\n".join(DICT_A) + "\n", encoding="utf-8")
    (OUT / "dict_b.txt").write_text("\n".join(DICT_B) + "\n", encoding="utf-8")
    kb = ["# word\tsense\tsememes"] + [f"{w}\t{s}\t{','.join(m)}" for w, s, m in KB]
    (OUT / "toy_kb.tsv").write_text("\n".join(kb) + "\n", encoding="utf-8")
    sememes = sorted({m for _, _, ms in KB for m in ms})
    emb = [f"{s}\t" + " ".join(f"{rng.uniform(-1, 1):.6f}" for _ in range(SEMEME_DIM))
           for s in sememes]
    (OUT / "toy_sememes.emb").write_text("\n".join(emb) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
