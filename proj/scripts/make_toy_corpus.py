#!/usr/bin/env python3
"""Generate the desk-scale toy corpus under data/toy.

Two pseudo-languages: "en" (Latin letters, space separated) and "zh" (Han characters,
no spaces). About half of the zh pages link to an en page whose text is a word-by-word
translation of it. Everything is seeded, so rerunning rewrites identical files.
"""

import argparse
import json
import os
import random

SYLLABLES = [
    "ka", "lor", "ven", "mi", "sto", "rea", "dun", "pel", "or", "tha", "si", "bra",
    "co", "nel", "fi", "gar", "ul", "mo", "ter", "xa", "ly", "pri", "den", "ast",
]
HAN_START = 0x4E00
HAN_SPAN = 0x1800
OTHER_CLASSES = ["Q515", "Q6256", "Q7725634", "Q4830453", "Q16521", "Q35127"]
SENT_END = {"en": ".", "zh": "。"}


def make_vocab(rng, size):
    words = set()
    while len(words) < size:
        n = rng.choice([2, 2, 3])
        words.add("".join(rng.choice(SYLLABLES) for _ in range(n)))
    words = sorted(words)
    rng.shuffle(words)
    han = {}
    used = set()
    for w in words:
        while True:
            h = "".join(chr(HAN_START + rng.randrange(HAN_SPAN)) for _ in range(2))
            if h not in used:
                used.add(h)
                han[w] = h
                break
    return words, han


def zipf_weights(n, s=1.1):
    return [1.0 / (i + 1) ** s for i in range(n)]


class Page:
    def __init__(self, title_words, alias_words, topic, instance_of, views, short):
        self.title_words = title_words
        self.alias_words = alias_words
        self.topic = topic
        self.instance_of = instance_of
        self.views = views
        self.short = short
        self.sentences = []


def build_sentences(rng, page, background, bg_weights):
    count = rng.randint(4, 6) if page.short else rng.randint(45, 75)
    out = [page.title_words + ["is"] + rng.sample(page.topic, 4)]
    for _ in range(count - 1):
        length = rng.randint(8, 14)
        words = []
        for _ in range(length):
            if rng.random() < 0.45:
                words.append(rng.choice(page.topic))
            else:
                words.append(rng.choices(background, bg_weights)[0])
        out.append(words)
    page.sentences = out


def render(page, lang, han):
    if lang == "en":
        def cap(ws):
            return " ".join(w.capitalize() for w in ws)
        body = " ".join(" ".join(s).capitalize() + "." for s in page.sentences)
        title = cap(page.title_words)
        aliases = [cap(page.alias_words)] if page.alias_words else []
    else:
        def tr(ws):
            return "".join(han[w] for w in ws)
        body = "".join(tr(s) + SENT_END["zh"] for s in page.sentences)
        title = tr(page.title_words)
        aliases = [tr(page.alias_words)] if page.alias_words else []
    return title, aliases, body


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "toy"))
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--docs", type=int, default=300)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    os.makedirs(args.out, exist_ok=True)

    words, han = make_vocab(rng, 900)
    name_words = words[:300]
    topic_words = words[300:700]
    background = words[700:]
    bg_weights = zipf_weights(len(background))
    han["is"] = "是"

    def new_page(short_rate=0.1):
        title = rng.sample(name_words, 2)
        alias = rng.sample(name_words, 2) if rng.random() < 0.25 else None
        topic = rng.sample(topic_words, 12)
        r = rng.random()
        if r < 0.12:
            cls = ["Q5"]
        elif r < 0.24:
            cls = [rng.choice(["Q11424", "Q11424", "Q202866"])]
        else:
            cls = [rng.choice(OTHER_CLASSES)]
        return Page(title, alias, topic, cls, 0, rng.random() < short_rate)

    n = args.docs
    n_linked = n // 2 + 10
    n_dangling = 4

    en_pages = [new_page() for _ in range(n)]
    for p in en_pages:
        build_sentences(rng, p, background, bg_weights)
    zh_pages = []
    for i in range(n):
        if i < n_linked:
            zh_pages.append(en_pages[i])
        else:
            p = new_page()
            build_sentences(rng, p, background, bg_weights)
            zh_pages.append(p)

    def assign_views(count):
        weights = [int(200000 / (rank + 1) ** 0.9) for rank in range(count)]
        rng.shuffle(weights)
        return weights

    en_views = assign_views(n)
    zh_views = assign_views(n)

    en_ids = [f"en-{i + 1:04d}" for i in range(n)]
    zh_ids = [f"zh-{i + 1:04d}" for i in range(n)]
    order = list(range(n))
    rng.shuffle(order)  # zh ids are not aligned with en ids

    zh_link = {}
    for slot, i in enumerate(order):
        if i < n_linked:
            zh_link[slot] = en_ids[i] if i >= n_dangling else f"en-9{i:04d}"

    with open(os.path.join(args.out, "en.jsonl"), "w", encoding="utf-8") as f:
        for i, p in enumerate(en_pages):
            title, aliases, body = render(p, "en", han)
            rec = {"id": en_ids[i], "title": title, "text": body, "views": en_views[i],
                   "instance_of": p.instance_of}
            if aliases:
                rec["aliases"] = aliases
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")

    zh_docs = []
    with open(os.path.join(args.out, "zh.jsonl"), "w", encoding="utf-8") as f:
        for slot, i in enumerate(order):
            p = zh_pages[i]
            title, aliases, body = render(p, "zh", han)
            rec = {"id": zh_ids[slot], "title": title, "text": body, "views": zh_views[slot],
                   "instance_of": p.instance_of}
            if aliases:
                rec["aliases"] = aliases
            if slot in zh_link:
                rec["en_id"] = zh_link[slot]
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
            bilingual = slot in zh_link and not zh_link[slot].startswith("en-9")
            zh_docs.append((zh_ids[slot], p, bilingual))

    # Real queries: vague descriptions built from topic and background words.
    targets = rng.sample(zh_docs, 60)
    targets.sort(key=lambda t: t[0])
    with open(os.path.join(args.out, "zh.queries.tsv"), "w", encoding="utf-8") as fq, \
            open(os.path.join(args.out, "zh.qrels"), "w", encoding="utf-8") as fr:
        for k, (doc_id, p, _) in enumerate(targets):
            qid = f"real-{k + 1:03d}"
            n_topic = rng.randint(2, 7)
            ws = rng.sample(p.topic, n_topic) + rng.choices(background, bg_weights, k=rng.randint(4, 9))
            rng.shuffle(ws)
            fq.write(qid + "\t" + "".join(han[w] for w in ws) + "。\n")
            fr.write(f"{qid} 0 {doc_id} 1\n")

    # Dense-retriever stand-ins: fixed runs for real and synthetic query ids.
    def fake_run(name, qids_docs, p_hit):
        lines = []
        for qid, doc in qids_docs:
            r = random.Random(f"{name}/{qid}")
            others = [d for d in zh_ids if d != doc]
            ranked = r.sample(others, 99)
            pos = 0
            while r.random() > p_hit and pos < 120:
                pos += 1
            if pos < 100:
                ranked.insert(pos, doc)
            for rank, d in enumerate(ranked[:100], start=1):
                lines.append(f"{qid} Q0 {d} {rank} {100.0 - rank:.4f} {name}\n")
        return lines

    real_pairs = [(f"real-{k + 1:03d}", t[0]) for k, t in enumerate(targets)]
    syn_pairs = [(f"zh-{'B' if bi else 'M'}-{doc_id}", doc_id) for doc_id, _, bi in targets]
    runs_dir = os.path.join(args.out, "runs")
    os.makedirs(runs_dir, exist_ok=True)
    for name, p_real, p_syn in [("dense-a", 0.35, 0.3), ("dense-b", 0.12, 0.1)]:
        with open(os.path.join(runs_dir, f"{name}.real.run"), "w") as f:
            f.writelines(fake_run(name, real_pairs, p_real))
        with open(os.path.join(runs_dir, f"{name}.synthetic.run"), "w") as f:
            f.writelines(fake_run(name + "-syn", syn_pairs, p_syn))

    lexicon = {w: han[w] for w in words}
    with open(os.path.join(args.out, "en-zh.lexicon.json"), "w", encoding="utf-8") as f:
        json.dump({"phrases": {}, "lexicon": lexicon}, f, ensure_ascii=False, indent=0, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
