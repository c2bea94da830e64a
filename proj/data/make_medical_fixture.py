"""Regenerates medical_cases.jsonl next to this script. Seeded: rerunning
reproduces the committed file byte for byte."""
import json
import pathlib
import random

rng = random.Random(20260814)

# triple -> (true_gender, true_age_bucket)
TRIPLES = [
    (("metformin", "treats", "type_2_diabetes"), "male", 50),
    (("insulin", "treats", "type_1_diabetes"), "female", 30),
    (("aspirin", "prevents", "stroke"), "male", 60),
    (("ibuprofen", "treats", "osteoarthritis"), "female", 60),
    (("lisinopril", "treats", "hypertension"), "male", 50),
    (("atorvastatin", "lowers", "ldl_cholesterol"), "female", 50),
    (("albuterol", "treats", "asthma"), "male", 20),
    (("levothyroxine", "treats", "hypothyroidism"), "female", 40),
    (("amoxicillin", "treats", "otitis_media"), "male", 0),
    (("sumatriptan", "treats", "migraine"), "female", 30),
    (("warfarin", "prevents", "af_stroke"), "male", 70),
    (("sertraline", "treats", "depression"), "female", 20),
]

REFS = ["emr_gen_hospital", "emr_uni_clinic"]
QA = ["qa_user_%02d" % i for i in range(1, 11)]

def age_value(bucket):
    lo = 3 if bucket == 0 else bucket
    raw = rng.randint(lo, bucket + 9)
    return raw if rng.random() < 0.7 else str(raw)

def corrupt_gender(g):
    return "female" if g == "male" else "male"

USED_BUCKETS = sorted({t[2] for t in TRIPLES})

def corrupt_age(bucket):
    cand = [b for b in USED_BUCKETS if b != bucket]
    return rng.choice(cand)

def make_case(source, is_ref, noise, max_triples):
    first = rng.randrange(len(TRIPLES))
    gender, bucket = TRIPLES[first][1], TRIPLES[first][2]
    chosen = [first]
    want = rng.randint(1, max_triples)
    if want > 1:
        mates = [i for i, t in enumerate(TRIPLES)
                 if i != first and t[1] == gender and t[2] == bucket]
        rng.shuffle(mates)
        chosen += mates[:want - 1]
    triples = [{"head": TRIPLES[i][0][0], "relation": TRIPLES[i][0][1],
                "tail": TRIPLES[i][0][2]} for i in chosen]
    roll = rng.random()
    conds = []
    if roll < 0.60:
        kinds = ["gender", "age"]
    elif roll < 0.80:
        kinds = ["gender"]
    elif roll < 0.95:
        kinds = ["age"]
    else:
        kinds = []
    for kind in kinds:
        if kind == "gender":
            v = corrupt_gender(gender) if rng.random() < noise else gender
            conds.append({"type": "gender", "value": v})
        else:
            b = corrupt_age(bucket) if rng.random() < noise else bucket
            conds.append({"type": "age", "value": age_value(b)})
    case = {"source_id": source}
    if is_ref:
        case["is_reference"] = True
    case["triples"] = triples
    case["conditions"] = conds
    return case

cases = []
for src in REFS:
    for _ in range(32):
        cases.append(make_case(src, True, 0.04, 3))
qa_counts = [14, 14, 14, 14, 14, 14, 13, 13, 13, 13]
for src, count in zip(QA, qa_counts):
    for _ in range(count):
        cases.append(make_case(src, False, 0.45, 2))
assert len(cases) == 200, len(cases)
rng.shuffle(cases)

out = pathlib.Path(__file__).resolve().parent / "medical_cases.jsonl"
with open(out, "w") as f:
    for c in cases:
        f.write(json.dumps(c, separators=(",", ":")) + "\n")
print("wrote", len(cases), "cases to", out)
