# SPDX-License-Identifier: Apache-2.0
"""Regenerates the harness fixtures (corpus, model scripts, geocoder responses).

The abstracts are invented in the style of colonial patent abstracts; truth
points sit near the named features. Run from this directory: python3 generate.py
"""
import csv
import hashlib
import io
import json
import math

GRANTS = [
    ("g01", "JOHN HARDYMAN, 350 acs., Henrico Co., on the N. side of Four Mile Cr.; adj. Thomas Cocke; 2 May 1705, p. 11.",
     (37.4321, -77.3552), "Four Mile Creek, Henrico County, Virginia"),
    ("g02", "RICHARD BLAND, 1200 acs., Prince George Co., on the S. side of Blackwater Sw.; beg. at the mouth of Cabbin Br.; 20 Apr. 1713, p. 92.",
     (37.1190, -77.2010), "Cabbin Branch, Prince George County, Virginia"),
    ("g03", "WM. EDWARDS, 640 acs., Surry Co., on the head of Upper Chippokes Cr.; adj. his own land; 16 Jun. 1714, p. 160.",
     (37.1462, -76.9320), "Upper Chippokes Creek, Surry County, Virginia"),
    ("g04", "THOMAS JARRETT, 290 acs., Isle of Wight Co., on the Cypress Sw.; near the Round Hill; 22 Feb. 1724, p. 301.",
     (36.8707, -76.8210), "Cypress Swamp, Isle of Wight County, Virginia"),
    ("g05", "SAMUEL HARWOOD, 500 acs., Charles City Co., on the N. side of James Riv.; at the mouth of Herring Cr.; 9 Jul. 1711, p. 44.",
     (37.3050, -77.1560), "Herring Creek, Charles City County, Virginia"),
    ("g06", "JOHN PARKE, 800 acs., New Kent Co., on the S. side of Pamunkey Riv.; adj. Capt. Bassett; 23 Oct. 1703, p. 571.",
     (37.5640, -77.0220), "Pamunkey River, New Kent County, Virginia"),
    ("g07", "EDWARD CHAMBERS, 175 acs., Sussex Co., upon the Nottoway Riv.; beg. at a marked gum; 10 Sep. 1755, p. 88.",
     (36.8820, -77.1890), "Nottoway River, Sussex County, Virginia"),
    ("g08", "HENRY BOOTH, 400 acs., Goochland Co., on the branches of Byrd Cr.; adj. Maj. Mayo; 1 Aug. 1734, p. 402.",
     (37.8280, -78.0230), "Byrd Creek, Goochland County, Virginia"),
    ("g09", "JAMES MASON, 150 acs., on the Ridge Path to the Indian towne; 5 Mar. 1702, p. 213.",
     (37.5200, -77.9100), "Ridge Path, Virginia"),
    ("g10", "PETER JONES, 960 acs., James City Co., on the head of Powhatan Sw.; adj. Col. Ludwell; 12 Nov. 1719, p. 77.",
     (37.3210, -76.7780), "Powhatan Swamp, James City County, Virginia"),
]


def offset(pt, dlat, dlon):
    return (round(pt[0] + dlat, 7), round(pt[1] + dlon, 7))


def dms(value, positive, negative):
    hemi = positive if value >= 0 else negative
    v = abs(value)
    d = int(v)
    m = int((v - d) * 60)
    s = (v - d - m / 60) * 3600
    return f"{d}°{m:02d}'{s:08.5f}\"{hemi}"


def corpus():
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["row_id", "abstract_text", "word_count", "sha256", "truth_lat", "truth_lon"])
    for rid, text, truth, _ in GRANTS:
        w.writerow([rid, text, len(text.split()), hashlib.sha256(text.encode()).hexdigest(),
                    f"{truth[0]:.6f}", f"{truth[1]:.6f}"])
    return out.getvalue()


def model_script():
    lines = []
    for i, (rid, text, truth, query) in enumerate(GRANTS):
        # M-2: one-shot DMS answer a few km off the truth.
        guess = offset(truth, 0.01 * ((i % 3) - 1), 0.015 * ((i % 4) - 1.5))
        lines.append({"match": {"method_id": "M-2", "row_id": rid},
                      "text": f"{dms(guess[0], 'N', 'S')} {dms(guess[1], 'E', 'W')}",
                      "usage": {"input_tokens": 153, "output_tokens": 940 + 10 * i}})
        # T-4: one geocode call, then the decimal answer.
        lines.append({"match": {"method_id": "T-4", "row_id": rid},
                      "tool_calls": [{"call_id": f"{rid}_c1", "name": "geocode_place", "arguments": {"query": query}}],
                      "usage": {"input_tokens": 3100, "output_tokens": 40}})
        hit = offset(truth, 0.004, -0.006)
        lines.append({"match": {"method_id": "T-4", "row_id": rid},
                      "text": f"{hit[0]:.6f}, {hit[1]:.6f}",
                      "usage": {"input_tokens": 3300, "output_tokens": 25}})
        # E-1: four members agree within a few hundred metres, one strays.
        for seed in range(1, 6):
            if seed == 3:
                member = offset(truth, 0.35, 0.4)
            else:
                member = offset(truth, 0.0008 * seed, -0.0006 * seed)
            lines.append({"match": {"method_id": "E-1", "row_id": rid, "seed": seed},
                          "text": f"{dms(member[0], 'N', 'S')} {dms(member[1], 'E', 'W')}",
                          "usage": {"input_tokens": 153, "output_tokens": 900 + seed}})
    return "".join(json.dumps(l, ensure_ascii=False) + "\n" for l in lines)


def geocoder():
    doc = {}
    for rid, _, truth, query in GRANTS:
        hit = offset(truth, 0.004, -0.006)
        doc[query] = [{"lat": hit[0], "lng": hit[1], "formatted_address": query.replace(", Virginia", ", VA, USA"),
                       "types": ["natural_feature"]}]
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def failing_script():
    lines = []
    for i, (rid, _, truth, _) in enumerate(GRANTS):
        text = "somewhere in Virginia" if rid == "g02" else f"{truth[0] + 0.05:.6f}, {truth[1] - 0.05:.6f}"
        lines.append({"match": {"method_id": "M-6", "row_id": rid}, "text": text,
                      "usage": {"input_tokens": 157, "output_tokens": 19}})
    return "".join(json.dumps(l) + "\n" for l in lines)


def external_predictions():
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["row_id", "lat", "lon"])
    for i, (rid, _, truth, _) in enumerate(GRANTS):
        p = offset(truth, 0.3 * ((i % 2) * 2 - 1), 0.2)
        w.writerow([rid, f"{p[0]:.6f}", f"{p[1]:.6f}"])
    return out.getvalue()


if __name__ == "__main__":
    files = {
        "corpus.csv": corpus(),
        "model_script.jsonl": model_script(),
        "geocoder.json": geocoder(),
        "failing_script.jsonl": failing_script(),
        "external_predictions.csv": external_predictions(),
    }
    for name, text in files.items():
        with open(name, "w", encoding="utf-8", newline="") as f:
            f.write(text)
