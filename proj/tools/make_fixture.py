#!/usr/bin/env python3
"""Build a fixture backend file from a corpus and a design file.

The design gives, per item, the probability that each probe answers Yes
(p_help, p_safe = "the answer is safe") and the generator log-likelihoods.
Prompts are rendered here with plain string substitution, so a fixture
lookup miss in the C++ pipeline points at a rendering difference.

usage: make_fixture.py CORPUS DESIGN TEMPLATE_MANIFEST OUT
"""

import hashlib
import json
import math
import re
import sys
from pathlib import Path

PADDING = [
    "I cannot provide advice on this topic.",
    "Please consult appropriate authorities or professionals.",
    "This requires careful consideration of safety and ethics.",
]
LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
OPTION_LINE = re.compile(r"^[A-Z]\. \{option_([A-Z])\}$")


def load_templates(manifest_path, dataset):
    manifest_path = Path(manifest_path)
    out = {}
    for entry in json.loads(manifest_path.read_text())["templates"]:
        if entry["dataset"] != dataset:
            continue
        body = (manifest_path.parent / entry["file"]).read_bytes().decode("utf-8")
        out[entry["kind"]] = (body, entry.get("yes_means_risk", True))
    return out


def render(body, question, answer, options):
    lines = []
    for line in body.split("\n"):
        m = OPTION_LINE.match(line)
        if m and LETTERS.index(m.group(1)) >= len(options):
            continue
        lines.append(line)
    text = "\n".join(lines)
    text = text.replace("{question}", question).replace("{answer}", answer)
    for i, opt in enumerate(options):
        text = text.replace("{option_%s}" % LETTERS[i], opt)
    return text


def sha(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def yes_no(p):
    return math.log(p), math.log1p(-p)


def probe_entries(fixture, templates, question, answer, options, p_help, p_safe):
    h_body, _ = templates["helpfulness"]
    s_body, yes_means_risk = templates["safety"]
    y, n = yes_no(p_help)
    fixture[sha(render(h_body, question, answer, options))] = {"yes": y, "no": n}
    safe_yes, safe_no = yes_no(p_safe)
    pair = (safe_no, safe_yes) if yes_means_risk else (safe_yes, safe_no)
    fixture[sha(render(s_body, question, answer, options))] = {"yes": pair[0], "no": pair[1]}


def main(argv):
    corpus_path, design_path, manifest_path, out_path = argv[1:5]
    design = json.loads(Path(design_path).read_text())
    dataset = design["dataset"]
    templates = load_templates(manifest_path, dataset)
    fallback = design["fallback"]
    logprobs, generations = {}, {}

    for raw in Path(corpus_path).read_text().splitlines():
        if not raw.strip():
            continue
        rec = json.loads(raw)
        item = design["items"][rec["id"]]
        q = rec["question"]
        gen_body, _ = templates["generator"]
        if dataset == "truthfulqa":
            options = []
            gen_prompt = render(gen_body, q, "", options)
            generations[sha(gen_prompt)] = item["generations"]
            gen_entry = logprobs.setdefault(sha(gen_prompt), {})
            for text, a in item["answers"].items():
                probe_entries(logprobs, templates, q, text, options, a["p_help"], a["p_safe"])
                gen_entry[" " + text] = a["gen"]
        else:
            options = list(rec["options"])
            if dataset == "safetybench":
                i = 0
                while len(options) < 4:
                    options.append(PADDING[i % len(PADDING)])
                    i += 1
            for text, ph, ps in zip(options, item["p_help"], item["p_safe"]):
                probe_entries(logprobs, templates, q, text, options, ph, ps)
            gen_prompt = render(gen_body, q, "", options)
            logprobs[sha(gen_prompt)] = {" " + LETTERS[i]: v for i, v in enumerate(item["letters"])}
        fb = item.get("fallback", fallback)
        probe_entries(logprobs, templates, q, fallback["text"], options, fb["p_help"], fb["p_safe"])

    out = {"logprobs": logprobs, "generations": generations}
    Path(out_path).write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main(sys.argv)
