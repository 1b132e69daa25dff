#!/usr/bin/env python3
"""Regenerates resources/fixtures/*.json.

Each story is written once with its planted edits marked as {{clean|corrupted}}
(an empty clean side is an insertion). From that the script derives the clean
source text, the corrupted story, the ground-truth injection records, the
canned judge replies and the report the checker must produce. Offsets and
anchors are computed here independently of the C++ code: exact matches by
string search over whitespace-normalized text, fuzzy matches by brute-force
edit distance over every admissible window.

Usage: build_fixtures.py [OUTPUT_DIR]
"""

import json
import math
import re
import sys
from fractions import Fraction
from pathlib import Path

CREATED_AT = "2026-01-01T00:00:00Z"
JUDGE = "mock"
PIPELINE_VERSION = "constory-checker/1.0"

# (schema key, array key, category key) in taxonomy order.
SUBTYPES = [
    ("absolute_time_error", "absolute_time_contradictions", "timeline_plot_logic"),
    ("duration_error", "duration_contradictions", "timeline_plot_logic"),
    ("simultaneity_paradox", "simultaneity_contradictions", "timeline_plot_logic"),
    ("causeless_effect", "causeless_effects", "timeline_plot_logic"),
    ("causal_logic_violation", "causal_logic_violations", "timeline_plot_logic"),
    ("abandoned_plot_element", "abandoned_plot_elements", "timeline_plot_logic"),
    ("memory_contradiction", "memory_contradictions", "characterization"),
    ("knowledge_contradiction", "knowledge_contradictions", "characterization"),
    ("skill_fluctuation", "skill_power_fluctuations", "characterization"),
    ("forgotten_ability", "forgotten_abilities", "characterization"),
    ("core_rules_violation", "core_rules_violations", "world_building_setting"),
    ("social_norms_violation", "social_norms_violations", "world_building_setting"),
    ("geographical_contradiction", "geographical_contradictions", "world_building_setting"),
    ("appearance_mismatch", "appearance_mismatches", "factual_detail_consistency"),
    ("nomenclature_confusion", "nomenclature_confusions", "factual_detail_consistency"),
    ("quantitative_mismatch", "quantitative_mismatches", "factual_detail_consistency"),
    ("perspective_confusion", "perspective_confusions", "narrative_style"),
    ("tone_inconsistency", "tone_inconsistencies", "narrative_style"),
    ("style_shift", "style_shifts", "narrative_style"),
]
CATEGORIES = [
    "timeline_plot_logic",
    "characterization",
    "world_building_setting",
    "factual_detail_consistency",
    "narrative_style",
]
PAIR_FREE = {"causeless_effect", "abandoned_plot_element", "forgotten_ability"}
SUBTYPE_INDEX = {s[0]: i for i, s in enumerate(SUBTYPES)}
ARRAY_KEY = {s[0]: s[1] for s in SUBTYPES}
CATEGORY_OF = {s[0]: s[2] for s in SUBTYPES}

WHITESPACE = set("\t\n\x0b\x0c\r \x85\xa0\u1680\u2028\u2029\u202f\u205f\u3000") | {
    chr(c) for c in range(0x2000, 0x200B)
}

MARK = re.compile(r"\{\{(.*?)\|(.*?)\}\}", re.S)


# ---------------------------------------------------------------------------
# Text assembly


def assemble(marked):
    """Returns (clean, corrupted, edits) with per-edit code-point ranges."""
    clean, corrupted, edits = [], [], []
    clen = olen = 0
    pos = 0
    for m in MARK.finditer(marked):
        plain = marked[pos : m.start()]
        clean.append(plain)
        corrupted.append(plain)
        clen += len(plain)
        olen += len(plain)
        before, after = m.group(1), m.group(2)
        edits.append(
            {
                "original": (clen, clen + len(before)),
                "corrupted": (olen, olen + len(after)),
                "text": after,
            }
        )
        clean.append(before)
        corrupted.append(after)
        clen += len(before)
        olen += len(after)
        pos = m.end()
    clean.append(marked[pos:])
    corrupted.append(marked[pos:])
    return "".join(clean), "".join(corrupted), edits


def strip_range(text, rng):
    a, b = rng
    while a < b and text[a] in WHITESPACE:
        a += 1
    while b > a and text[b - 1] in WHITESPACE:
        b -= 1
    return a, b


def unique_find(text, needle):
    first = text.find(needle)
    if first < 0:
        raise SystemExit(f"not found: {needle!r}")
    if text.find(needle, first + 1) >= 0:
        raise SystemExit(f"not unique: {needle!r}")
    return first


def word_count(text):
    count, in_word = 0, False
    for ch in text:
        if ch in WHITESPACE:
            in_word = False
        elif not in_word:
            in_word = True
            count += 1
    return count


# ---------------------------------------------------------------------------
# Anchoring oracle


def normalize(text):
    chars, starts, ends = [], [], []
    i, n = 0, len(text)
    while i < n:
        if text[i] in WHITESPACE:
            j = i
            while j < n and text[j] in WHITESPACE:
                j += 1
            if chars and j < n:
                chars.append(" ")
                starts.append(i)
                ends.append(j)
            i = j
            continue
        chars.append(text[i])
        starts.append(i)
        ends.append(i + 1)
        i += 1
    return "".join(chars), starts, ends


def normalize_quote(q):
    words, cur = [], []
    for c in q:
        if c in WHITESPACE:
            if cur:
                words.append("".join(cur))
                cur = []
        else:
            cur.append(c)
    if cur:
        words.append("".join(cur))
    return " ".join(words)


def anchor(text, quote, min_score=0.80, slack=0.20):
    norm, starts, ends = normalize(text)
    q = normalize_quote(quote)
    pos = norm.find(q)
    if pos >= 0:
        return {"start": starts[pos], "end": ends[pos + len(q) - 1], "match_score": 1.0}
    m, n = len(q), len(norm)
    lo = max(1, math.floor(m * (1 - slack)))
    hi = min(n, math.ceil(m * (1 + slack)))
    best = None  # (Fraction distance ratio, start, length)
    for s in range(n):
        prev = list(range(m + 1))
        for length in range(1, min(hi, n - s) + 1):
            c = norm[s + length - 1]
            cur = [length] + [0] * m
            for i in range(1, m + 1):
                cur[i] = min(prev[i] + 1, cur[i - 1] + 1, prev[i - 1] + (q[i - 1] != c))
            prev = cur
            if length < lo:
                continue
            ratio = Fraction(prev[m], max(m, length))
            if 1 - ratio < Fraction(min_score).limit_denominator(1000):
                continue
            key = (ratio, s, length)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    ratio, s, length = best
    score = 1.0 - float(ratio.numerator) / float(ratio.denominator)
    return {"start": starts[s], "end": ends[s + length - 1], "match_score": score}


# ---------------------------------------------------------------------------
# Fixture assembly


def finding_json(f):
    return {
        "fact_quote": f["fact_quote"],
        "location": f["location"],
        "contradiction_pair": f.get("contradiction_pair"),
        "contradiction_location": f.get("contradiction_location"),
        "error_element": f["error_element"],
        "error_category": f["subtype"],
        "context": f["context"],
    }


def empty_reply(category):
    return {s[1]: [] for s in SUBTYPES if s[2] == category}


def build(fixture_def):
    clean, text, edits = assemble(fixture_def["marked"])
    story_id = fixture_def["name"]
    assert 300 <= word_count(text) <= 1500, (story_id, word_count(text))

    # Ground truth: one record per planted error, in corrupted-span order.
    truth = []
    for err in fixture_def["errors"]:
        edit = edits[err["edit"]]
        cstart, cend = strip_range(text, edit["corrupted"])
        sentence = err["corrupted_sentence"]
        s_at = unique_find(text, sentence)
        assert s_at <= cstart and cend <= s_at + len(sentence), (story_id, sentence)
        rec = {
            "subtype": err["subtype"],
            "original_span": {
                "start": edit["original"][0],
                "end": edit["original"][1],
                "match_score": 1.0,
            },
            "corrupted_span": {"start": cstart, "end": cend, "match_score": 1.0},
            "description": err["finding"]["context"],
            "corrupted_sentence": sentence,
            "reference_sentence": err.get("reference_sentence"),
            "reference_span": None,
        }
        if err.get("reference_sentence"):
            r = unique_find(text, err["reference_sentence"])
            rec["reference_span"] = {
                "start": r,
                "end": r + len(err["reference_sentence"]),
                "match_score": 1.0,
            }
        truth.append(rec)
    truth.sort(key=lambda r: r["corrupted_span"]["start"])

    # Judge replies per category, listing every array of the category.
    findings = [dict(e["finding"], subtype=e["subtype"]) for e in fixture_def["errors"]]
    findings += [dict(d["finding"]) for d in fixture_def.get("decoys", [])]
    replies = {}
    for f in findings:
        cat = CATEGORY_OF[f["subtype"]]
        replies.setdefault(cat, empty_reply(cat))[ARRAY_KEY[f["subtype"]]].append(finding_json(f))
    script = {"seed": 0, "extraction": [], "verification": []}
    for cat in CATEGORIES:
        if cat in replies:
            script["extraction"].append({"story_id": story_id, "category": cat, "reply": replies[cat]})
    consistent = set()
    for d in fixture_def.get("decoys", []):
        script["verification"].append(
            {
                "story_id": story_id,
                "fact_quote": d["finding"]["fact_quote"],
                "reply": {"verdict": "Consistent", "rationale": d["rationale"]},
            }
        )
        consistent.add(d["finding"]["fact_quote"])

    # Expected report: findings in category order then array order, minus
    # the ones verification rejects, anchored and sorted by fact position.
    ordered = []
    for cat in CATEGORIES:
        for schema, array, c in SUBTYPES:
            if c != cat:
                continue
            for f in findings:
                if f["subtype"] == schema:
                    ordered.append(f)
    diagnostics = []
    entries = []
    for f in ordered:
        if f["fact_quote"] in consistent:
            preview = f["fact_quote"].encode("utf-8")[:80].decode("utf-8", "ignore")
            diagnostics.append(
                {
                    "stage": "pairing",
                    "category": CATEGORY_OF[f["subtype"]],
                    "message": f"judged consistent: '{preview}'",
                }
            )
            continue
        pair = f.get("contradiction_pair")
        assert pair or f["subtype"] in PAIR_FREE
        fa = anchor(text, f["fact_quote"])
        assert fa is not None, f["fact_quote"]
        evidence = [{"quote": text[fa["start"] : fa["end"]], "anchor": fa}]
        ca = None
        if pair:
            ca = anchor(text, pair)
            assert ca is not None, pair
            evidence.append({"quote": text[ca["start"] : ca["end"]], "anchor": ca})
        entry = {
            "fact_quote": f["fact_quote"],
            "location": f["location"],
            "contradiction_pair": pair,
            "contradiction_location": f.get("contradiction_location") or None,
            "error_element": f["error_element"],
            "error_category": f["subtype"],
            "context": f["context"],
            "fact_anchor": fa,
            "contradiction_anchor": ca,
            "verification": "contradictory" if pair else "not_required",
            "flags": [],
            "evidence_chain": {
                "reasoning": f["context"],
                "evidence": evidence,
                "conclusion": f["subtype"],
            },
        }
        entries.append(entry)
    entries.sort(key=lambda e: (e["fact_anchor"]["start"], SUBTYPE_INDEX[e["error_category"]]))

    report = {
        "story_id": story_id,
        "judge_model": JUDGE,
        "created_at": CREATED_AT,
        "pipeline_version": PIPELINE_VERSION,
        "error_count": len(entries),
    }
    for schema, array, _ in SUBTYPES:
        report[array] = [e for e in entries if e["error_category"] == schema]
    report["diagnostics"] = diagnostics

    story = {
        "id": story_id,
        "prompt_id": story_id,
        "source_model": "fixture",
        "task_type": "generation",
        "word_count": word_count(text),
        "refused": False,
        "text": text,
    }
    return {
        "name": story_id,
        "description": fixture_def["description"],
        "source_text": clean,
        "story": story,
        "truth": truth,
        "judge_script": script,
        "expected_report": report,
    }


# ---------------------------------------------------------------------------
# Stories

FIXTURES = []

FIXTURES.append(
    {
        "name": "timeline_donations_1983",
        "description": "A dated donation label contradicted by a remembered date; a key that is introduced and never used.",
        "marked": """The attic stairs complained under every step, and by the time Maren reached the top her mother was already sitting cross-legged among the boxes, a flashlight balanced on one knee.

Most of the cartons were unmarked, but the box by the window bore a label scrawled in her grandmother's looping script: Donations -- 1983. The tape had yellowed and split, and the cardboard smelled of cedar and dust. Inside lay forty or fifty paperbacks, their spines cracked white, and a stack of cookbooks held together with a rubber band that snapped the moment Maren touched it.

"I thought these were long gone," her mother said. She lifted a water-stained gardening manual and turned it over in her hands. "She always said she gave them to the church sale."

Maren knelt beside her. Her mother had been born in the spring of 1961, the same year the house was built, and she liked to say the two of them had grown old together. The attic had been her bedroom for one summer when the roof over the back porch leaked, and a faded pencil line on the beam still marked how tall she had been at nine.

{{|Taped inside the lid was a small brass key on a paper tag that read, in the same looping hand, For Maren, when the time comes. }}They worked through the box slowly. Her mother read the titles aloud, and Maren sorted them into piles: keep, sell, and a third pile for the ones too damaged to save. Near the bottom they found a ledger bound in green cloth, its pages filled with columns of figures in faded blue ink.

"What happened to the rest of them?" Maren asked. "There must have been more than one box."

Her mother shook her head. "There were three, I think. {{Your grandmother packed them up the year I finished college.|Your grandmother donated them when I was in middle school.}} She kept saying she would drive them over to the parish hall, and then she never did."

She laughed, but it came out thin. Maren watched her run a thumb along the edge of the ledger as if she expected it to be warm.

Outside, the light was going. A car passed on the street below and its headlights swept across the rafters, and for a moment the whole attic seemed to tilt. Maren set the flashlight on a trunk so that it pointed at the ceiling, and the room filled with a soft, uneven glow.

"We could keep the cookbooks," she said. "You used to make the lemon cake from one of them."

"The one with the burned cover." Her mother smiled properly this time. "She wrote corrections in the margins. Half the recipes are wrong without them."

They carried the box down together, one of them on each side, taking the stairs sideways. In the kitchen her mother cleared a space on the table and began to lay the cookbooks out in a row, opening each one to check the margins. Maren put the kettle on. By the time it boiled, her mother had found the lemon cake, and the page was exactly as she remembered it: a brown ring from a coffee cup, a smear of something that might once have been butter, and in the corner, underlined twice, the words Less sugar than you think.
""",
        "errors": [
            {
                "edit": 1,
                "subtype": "absolute_time_error",
                "corrupted_sentence": "Your grandmother donated them when I was in middle school.",
                "reference_sentence": "Most of the cartons were unmarked, but the box by the window bore a label scrawled in her grandmother's looping script: Donations -- 1983.",
                "finding": {
                    "fact_quote": "the box … bore a label scrawled in her grandmother's looping script: Donations -- 1983.",
                    "location": "Paragraph 2",
                    "contradiction_pair": "Your grandmother donated them when I was in middle school.",
                    "contradiction_location": "Paragraph 7",
                    "error_element": "donation date",
                    "context": "The box is labeled as donated in 1983, yet Maren's mother, born in 1961, says the books were given away while she was in middle school, about ten years earlier.",
                },
            },
            {
                "edit": 0,
                "subtype": "abandoned_plot_element",
                "corrupted_sentence": "Taped inside the lid was a small brass key on a paper tag that read, in the same looping hand, For Maren, when the time comes.",
                "finding": {
                    "fact_quote": "Taped inside the lid was a small brass key on a paper tag that read, in the same looping hand, For Maren, when the time comes.",
                    "location": "Paragraph 5",
                    "contradiction_pair": None,
                    "contradiction_location": None,
                    "error_element": "brass key",
                    "context": "A key addressed to Maren is introduced with emphasis and never mentioned again.",
                },
            },
        ],
    }
)

FIXTURES.append(
    {
        "name": "characterization_hitchhiking",
        "description": "A narrator who forgets how long they have been on the road.",
        "marked": """I've been hitching rides across this sprawling country since I was twenty-one, a full decade of thumbs and shoulders and gravel. People ask me why, and I tell them it is cheaper than therapy and the company is better.

The rain had followed me out of Tucumcari and it was still coming down when the truck pulled onto the shoulder. It was a flatbed hauling irrigation pipe, and the driver leaned across to shove the passenger door open before I had even reached it.

"Get in before you drown," she said.

Her name was Della. She had a thermos of coffee wedged between the seats and a photograph of a grey dog taped to the dashboard. She drove with one wrist draped over the wheel and talked about the dog for forty miles: how he had ridden with her for eleven years, how he used to bark at cattle but never at people, how she still caught herself saving him the crust of her sandwiches.

We stopped at a café outside Santa Rosa where the waitress knew Della by name. The pie was cherry and too sweet, and the coffee tasted of the pot it had been sitting in since morning. Della paid for both of us before I could argue.

Back on the road the rain eased to a drizzle and then to nothing, and the desert opened up on either side, pale and enormous. Della turned the radio down.

"So how long you been doing this?" she asked. "Riding with strangers."

I watched a hawk circle over a fence line and thought about it.

"{{About ten years|About six years}}," I said.

She whistled. "That's a long time to be nowhere in particular."

"It's a long time to be everywhere," I said, which was a line I had used before, and she laughed as if she knew it.

We crossed into Texas a little after four. Della had a delivery in Amarillo and offered to let me sleep in the cab while she unloaded, and I took her up on it. When I woke up the sky was orange and she was sitting on the running board eating an apple, looking out at the lot.

"You could stay on," she said. "I've got a run to Oklahoma City tomorrow. It's not much of a job, but the seat's already warm."

I thought about the hawk and the fence line, and about all the roads I had not seen yet.

"Let me think about it," I said, and she nodded like that was the answer she had expected.
""",
        "errors": [
            {
                "edit": 0,
                "subtype": "memory_contradiction",
                "corrupted_sentence": "\"About six years,\" I said.",
                "reference_sentence": "I've been hitching rides across this sprawling country since I was twenty-one, a full decade of thumbs and shoulders and gravel.",
                "finding": {
                    "fact_quote": "I've been hitching rides across this sprawling country since I was twenty-one, a full decade of thumbs and shoulders and gravel.",
                    "location": "Paragraph 1",
                    "contradiction_pair": "\"About six years,\" I said.",
                    "contradiction_location": "Paragraph 9",
                    "error_element": "hitchhiking duration",
                    "context": "The narrator first claims to have been hitchhiking for a full decade, then tells Della it has been about six years.",
                },
            }
        ],
    }
)

FIXTURES.append(
    {
        "name": "world_opera_house",
        "description": "A ruined opera house that is later full of life, and a daylight rule that is broken without consequence.",
        "marked": """In the stillness of my underground lair, carved beneath the crumbling ruins of a forgotten opera house, I play. The organ was salvaged from a chapel that burned a century ago, and half its pipes are cracked, but I have learned which notes will sound and which will only sigh.

There are rules to this place, older than I am. The old bargain holds that I may never climb above the seventh stair while the sun is up. I learned the price of breaking it in my first year, when I went up at dawn to watch the light and came back with my hands blistered and my voice gone for a month.

So I keep to the dark. I mend the pipes with wax and wire. I read by the glow of a single lamp, and I count the stairs each evening before I climb them, one through seven, as if the number might have changed while I slept.

The city above has forgotten the opera house entirely. The box office is a nest of pigeons. The great chandelier lies in pieces across the orchestra pit, its crystals scattered like hailstones, and ivy has climbed through the broken skylight to hang over the stage in long green curtains.

Sometimes children dare each other to come inside. I hear them giggling at the edge of the lobby, and then a loose board groans and they run. I do not blame them. If I were a child I would run too.

I remember one visitor better than the rest. {{It happened on a night when the ruins were silent except for the wind.|It happened on a night when the opera house was alive with anticipation.}} A young woman came down the center aisle with a lantern, stepping around the fallen crystals, and stopped at the lip of the stage. She was humming. It was a phrase from an aria I had not heard in forty years, and she had the middle of it wrong.

I played it for her, correctly, from below.

She did not run. She stood very still and listened, and when I finished she sang the phrase back to me, correctly this time, and then she laughed at herself and went away.

She came back the next week, and the week after. {{At midnight|At noon}} I climbed to the roof to watch for her lantern, and I stood there among the pigeons until the streets below were empty.

I never learned her name. I think of her whenever the organ finds a note I thought was lost.
""",
        "errors": [
            {
                "edit": 0,
                "subtype": "geographical_contradiction",
                "corrupted_sentence": "It happened on a night when the opera house was alive with anticipation.",
                "reference_sentence": "In the stillness of my underground lair, carved beneath the crumbling ruins of a forgotten opera house, I play.",
                "finding": {
                    "fact_quote": "In the stillness of my underground lair, carved beneath the crumbling ruins of a forgotten opera house, I play.",
                    "location": "Paragraph 1",
                    "contradiction_pair": "It happened on a night when the opera house was alive with anticipation.",
                    "contradiction_location": "Paragraph 6",
                    "error_element": "opera house status",
                    "context": "The opera house is described as a forgotten ruin and later as active and full of life.",
                },
            },
            {
                "edit": 1,
                "subtype": "core_rules_violation",
                "corrupted_sentence": "At noon I climbed to the roof to watch for her lantern, and I stood there among the pigeons until the streets below were empty.",
                "reference_sentence": "The old bargain holds that I may never climb above the seventh stair while the sun is up.",
                "finding": {
                    "fact_quote": "The old bargain holds that I may never climb above the seventh stair while the sun is up.",
                    "location": "Paragraph 2",
                    "contradiction_pair": "At noon I climbed to the roof to watch for her lantern, and I stood there among the pigeons until the streets below were empty.",
                    "contradiction_location": "Paragraph 9",
                    "error_element": "daylight bargain",
                    "context": "The narrator cannot climb past the seventh stair while the sun is up, yet climbs to the roof at noon with no consequence.",
                },
            },
        ],
    }
)

FIXTURES.append(
    {
        "name": "appearance_eyes",
        "description": "Twin brothers whose eye colour changes between scenes; a count the judge first flags and then clears.",
        "marked": """The hall at Wyndmere had not been warmed in a decade, and the two brothers stood at opposite ends of it as if the cold had been arranged for them.

Their father's will lay open on the long table between them. The steward had read it twice, once for each of them, and then excused himself with the haste of a man leaving a room before the ceiling came down.

Kael spoke first. He always did. "You knew," he said. "You knew he'd do this."

"I knew nothing." Dorian's jaw tightened, his blue eyes blazing with barely restrained fury. "He didn't speak to me for the last three years of his life. You were the one who sat with him."

The estate had been divided in a way that pleased no one. The house and the orchards went to Dorian, the elder by eleven minutes. The mills on the river went to Kael. The horses, two grey mares their father had loved more than either son, were to be sold and the money given to the parish.

"He meant it as a lesson," Kael said.

"He meant it as a joke." Dorian walked to the window. Below, in the yard, a stable boy was leading the mares in a slow circle to keep them warm, and their breath hung in the air behind them. "He always thought we'd end up fighting over the pair of them."

For a while neither brother said anything. The fire the steward had lit was mostly smoke, and it crackled and spat without giving off any heat. Somewhere in the house a door banged in the wind.

"I'll buy them," Kael said at last. "The horses. I'll pay the parish whatever they're worth and keep them at the mills."

Dorian turned from the window. "And where would you ride them? Along the millrace?"

"Anywhere I like."

Kael met his twin's gaze, their matching {{blue|emerald}} eyes locked in a silent battle of wills. They had the same face, the same stubborn mouth, the same way of standing with their weight on the back foot, and for a long moment it was like watching a man argue with his own reflection.

Then Dorian laughed. It was a short sound, and it seemed to take him as much by surprise as it did his brother.

"Fine," he said. "Buy them. But they stay here through the winter. The mills flood every February and you know it."

Kael hesitated, and then nodded once. It was not peace, exactly. But it was the first thing they had agreed on in years.
""",
        "errors": [
            {
                "edit": 0,
                "subtype": "appearance_mismatch",
                "corrupted_sentence": "Kael met his twin's gaze, their matching emerald eyes locked in a silent battle of wills.",
                "reference_sentence": "Dorian's jaw tightened, his blue eyes blazing with barely restrained fury.",
                "finding": {
                    "fact_quote": "Dorian's jaw tightened, his blue eyes blazing with barely restrained fury.",
                    "location": "Paragraph 4",
                    "contradiction_pair": "Kael met his twin's gaze, their matching emerald eyes locked in a silent battle of wills.",
                    "contradiction_location": "Paragraph 12",
                    "error_element": "character eye color",
                    "context": "Dorian is first described with blue eyes and later the twins share matching emerald eyes.",
                },
            }
        ],
        "decoys": [
            {
                "finding": {
                    "subtype": "quantitative_mismatch",
                    "fact_quote": "The horses, two grey mares their father had loved more than either son, were to be sold and the money given to the parish.",
                    "location": "Paragraph 5",
                    "contradiction_pair": "He always thought we'd end up fighting over the pair of them.",
                    "contradiction_location": "Paragraph 7",
                    "error_element": "number of horses",
                    "context": "The horses are counted as two and later called a pair.",
                },
                "rationale": "A pair is two horses; the passages agree.",
            }
        ],
    }
)

FIXTURES.append(
    {
        "name": "narrative_perspective",
        "description": "A third-person story that slips into the first person at its emotional peak.",
        "marked": """Snow had sealed the valley road by the second week of January, and the cabin at the head of the pass was the only light for twenty miles.

Anselm had been rehearsing the words since autumn. He had said them to the woodpile and to the horse and once, badly, to his own reflection in the dark window, and none of it had made them any easier to say to Tobin.

They ate supper in silence. Tobin had cooked, as he always did when the weather turned, a stew of barley and salt pork that filled the single room with steam. He talked about the roof, which was leaking again over the bunks, and about the fox he had seen crossing the frozen creek that morning with something limp in its jaws.

When the plates were cleared, Anselm put a folded letter on the table.

It was from Tobin's sister. It had come in October, before the snow, and it said that their mother had died in the summer and that she had asked for Tobin at the end. Anselm had carried it in his coat for three months. He had told himself he was waiting for the right moment, and then that there was no right moment, and then nothing at all.

Tobin read it twice. Then he set it down very carefully, as if it might shatter, and put both hands flat on the table.

The cabin trembled under the weight of Tobin's grief. It was not loud. It was a low sound, almost nothing, like wind finding a gap under the door, and it went on for a long time.

{{Anselm stood frozen, his own breath hitching in his throat, watching the man he had called his closest friend collapse under the truth he had carried for so long.|I stood frozen, my own breath hitching in my throat, watching the man I had called my closest friend collapse under the truth I had carried for so long.}}

At last Tobin looked up. His face was wet and very calm.

"October," he said.

"Yes."

"You could have sent word to the pass station. They would have held the mail."

"I know."

Tobin nodded slowly. He folded the letter along its old creases and put it inside his shirt, against his chest. Then he got up, took the lantern from its hook, and went out into the snow to see to the horse, and Anselm sat alone at the table and listened to the fire until he came back.
""",
        "errors": [
            {
                "edit": 0,
                "subtype": "perspective_confusion",
                "corrupted_sentence": "I stood frozen, my own breath hitching in my throat, watching the man I had called my closest friend collapse under the truth I had carried for so long.",
                "reference_sentence": "The cabin trembled under the weight of Tobin's grief.",
                "finding": {
                    "fact_quote": "I stood frozen, my own breath hitching in my throat, watching the man I had called my closest friend collapse under the truth I had carried for so long.",
                    "location": "Paragraph 8",
                    "contradiction_pair": "The cabin trembled under the weight of Tobin's grief.",
                    "contradiction_location": "Paragraph 7",
                    "error_element": "point of view shift",
                    "context": "The story is told in the third person about Anselm and Tobin, then shifts to the first person without transition.",
                },
            }
        ],
    }
)

FIXTURES.append(
    {
        "name": "factual_names_numbers",
        "description": "A cavalry officer renamed mid-story and a column whose size shrinks without losses.",
        "marked": """The column came over the ridge an hour before dusk, three hundred riders strung out in a line so long that the last of them were still in the trees when the first reached the ford.

Captain Richardson led his troops down to the water himself. He was a narrow, weathered man who had served on the frontier for twenty years, and he did not trust fords he had not crossed before. He rode into the river to the stirrups, turned his horse against the current, and waited until he was sure of the bottom before he waved the others on.

Corporal Imre Sando watched from the bank. He was nineteen and had been with the company for less than a month, and everything still seemed to him either very important or very strange. The captain's calm was both.

They made camp on the far side in a meadow ringed with birches. The quartermaster counted the sacks of grain twice and announced that there was enough for six days if nobody was greedy. Nobody believed him, but nobody argued, either.

That night the scouts came back with news of the bridge at Ostvar. It was down. The spring flood had taken the middle span, and the nearest crossing after that was forty miles north, through country none of them knew.

{{Captain Richardson|Captain Robinson}} shouted orders before the scouts had finished speaking. Fires out. Horses saddled by first light. The wagons would go back the way they had come, with a dozen men to guard them, and the rest would ride north and take their chances with the hills.

Sando helped douse the fires. The smoke hung low over the meadow, and through it he could see the officers gathered around a map spread on a drum, pointing and arguing in voices too low to carry.

"He's going to split the column," said the man next to him, an older trooper with a broken nose. "You watch. Half of us will end up guarding turnips."

He was wrong. In the morning the captain rode down the line and spoke to each troop in turn, and when the column moved out at sunrise it was whole. All the rest, nearly {{three hundred|two hundred}} riders, went north together, and the wagons went south with their dozen guards, and by noon the birches were out of sight behind them.

Sando rode near the front. The hills were steeper than the map had promised and the path narrowed until the horses went single file, and once, looking back from a switchback, he saw the whole column stretched below him like a thread pulled through a needle.
""",
        "errors": [
            {
                "edit": 0,
                "subtype": "nomenclature_confusion",
                "corrupted_sentence": "Captain Robinson shouted orders before the scouts had finished speaking.",
                "reference_sentence": "Captain Richardson led his troops down to the water himself.",
                "finding": {
                    "fact_quote": "Captain Richardson led his troops down to the water himself.",
                    "location": "Paragraph 2",
                    "contradiction_pair": "Captain Robinson shouted orders before the scouts had finished speaking.",
                    "contradiction_location": "Paragraph 6",
                    "error_element": "character surname",
                    "context": "The same commanding officer is called Richardson and later Robinson.",
                },
            },
            {
                "edit": 1,
                "subtype": "quantitative_mismatch",
                "corrupted_sentence": "All the rest, nearly two hundred riders, went north together, and the wagons went south with their dozen guards, and by noon the birches were out of sight behind them.",
                "reference_sentence": "The column came over the ridge an hour before dusk, three hundred riders strung out in a line so long that the last of them were still in the trees when the first reached the ford.",
                "finding": {
                    "fact_quote": "The column came over the ridge an hour before dusk, three hundred riders strung out in a line so long that the last of them were still in the trees when the first reached the ford.",
                    "location": "Paragraph 1",
                    "contradiction_pair": "All the rest, nearly two hundred riders, went north together",
                    "contradiction_location": "Paragraph 9",
                    "error_element": "column size",
                    "context": "The column numbers three hundred riders, and after only a dozen guards leave, the remainder is given as nearly two hundred.",
                },
            },
        ],
    }
)

FIXTURES.append(
    {
        "name": "clean_story",
        "description": "A short story with no consistency errors.",
        "marked": """Every morning at six, Ines climbed the hundred and twelve steps of the lighthouse on Carrow Point to wind the clockwork that turned the lens.

The mechanism was older than the tower's electric lamp by forty years, and the harbour board had talked for a long time about replacing it with a motor. Ines had argued against it at three meetings in a row. The clockwork had never failed, she said, and a motor would need a generator, and a generator would need fuel brought out by boat in weather when no boat should be on the water. In the end the board had left the clockwork alone, mostly because nobody else wanted to climb the steps.

She did not mind the climb. She counted the steps under her breath and stopped at the fiftieth to look out of the narrow window on the seaward side, where on clear days she could see the smudge of the mainland and, on very clear days, the white dot of the church at Halse.

This morning the sky was low and grey and the window showed nothing but water. She kept climbing.

At the top she unlatched the brass cover of the winding drum, fitted the crank, and turned it sixty times, which was enough to keep the lens rotating for a day and a half. The lens itself was a great beehive of glass prisms, taller than she was, and when the sun caught it in the afternoon it threw small rainbows across the floor of the lamp room.

Afterwards she wiped the salt from the outside of the glass with a cloth on a long pole, checked the lamp, and wrote the date and the weather in the log: wind from the south-west, visibility poor, sea moderate.

Then she went down the hundred and twelve steps again, counting, and put the kettle on.

The supply boat was due on Thursday. Until then there was bread, and tinned fish, and the last of the apples from the autumn, and a letter from her brother that she had been saving to read a second time.
""",
        "errors": [],
    }
)


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[2] / "resources" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    for fixture_def in FIXTURES:
        fixture = build(fixture_def)
        path = out / f"{fixture_def['name']}.json"
        path.write_text(json.dumps(fixture, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        words = fixture["story"]["word_count"]
        print(f"{path.name}: {words} words, {len(fixture['truth'])} planted, "
              f"{fixture['expected_report']['error_count']} reported")


if __name__ == "__main__":
    main()
