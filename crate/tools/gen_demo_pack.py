#!/usr/bin/env python3
"""Regenerates packs/demo-computing.json.

Questions are built from small fact tables so that every concept has a deep
bank at each level. Output is deterministic.
"""

import json
import random
from pathlib import Path

STYLES = ["SS", "GOA", "EIA", "CA", "DLA"]
PER_LEVEL = {"L1": 24, "L2": 24, "L3": 16}


def weights(key, **per_style):
    return {s: per_style.get(s, key) for s in STYLES}


# (subject, category) tables per section.
IPO = [
    ("keyboard", "input"), ("mouse", "input"), ("scanner", "input"),
    ("microphone", "input"), ("webcam", "input"), ("barcode reader", "input"),
    ("printer", "output"), ("monitor", "output"), ("speaker", "output"),
    ("projector", "output"), ("headphones", "output"), ("plotter", "output"),
    ("CPU", "processing"), ("graphics processor", "processing"),
    ("hard disk", "storage"), ("USB flash drive", "storage"),
    ("solid-state drive", "storage"), ("memory card", "storage"),
]
HWSW = [
    ("RAM module", "hardware"), ("motherboard", "hardware"), ("power supply", "hardware"),
    ("network card", "hardware"), ("graphics card", "hardware"), ("keyboard", "hardware"),
    ("cooling fan", "hardware"), ("monitor", "hardware"),
    ("operating system", "software"), ("web browser", "software"),
    ("word processor", "software"), ("device driver", "software"),
    ("spreadsheet program", "software"), ("antivirus program", "software"),
    ("compiler", "software"), ("video game", "software"),
]
CPU_MEM = [
    ("arithmetic logic unit", "processor part"), ("control unit", "processor part"),
    ("register", "processor part"), ("instruction decoder", "processor part"),
    ("RAM", "volatile memory"), ("cache", "volatile memory"),
    ("video RAM", "volatile memory"), ("main memory", "volatile memory"),
    ("ROM", "non-volatile memory"), ("firmware chip", "non-volatile memory"),
    ("flash memory", "non-volatile memory"), ("EEPROM", "non-volatile memory"),
]
STORAGE = [
    ("hard disk drive", "magnetic"), ("floppy disk", "magnetic"),
    ("magnetic tape", "magnetic"), ("DVD", "optical"), ("Blu-ray disc", "optical"),
    ("CD-ROM", "optical"), ("solid-state drive", "solid-state"),
    ("USB flash drive", "solid-state"), ("SD card", "solid-state"),
]
PORTS = [
    ("HDMI", "video"), ("DisplayPort", "video"), ("VGA", "video"),
    ("USB", "general peripherals"), ("Thunderbolt", "general peripherals"),
    ("Ethernet", "networking"), ("Wi-Fi adapter", "networking"),
    ("audio jack", "sound"), ("S/PDIF", "sound"),
]
SYSTEM_SW = [
    ("Linux", "operating system"), ("Windows", "operating system"),
    ("macOS", "operating system"), ("Android", "operating system"),
    ("disk defragmenter", "utility"), ("backup tool", "utility"),
    ("file compression tool", "utility"), ("antivirus scanner", "utility"),
    ("printer driver", "device driver"), ("graphics driver", "device driver"),
    ("network driver", "device driver"), ("sound driver", "device driver"),
]
APPS = [
    ("writing a letter", "word processor"), ("formatting a report", "word processor"),
    ("calculating a budget", "spreadsheet"), ("charting monthly sales", "spreadsheet"),
    ("storing customer records", "database"), ("searching stock levels", "database"),
    ("giving a slide talk", "presentation software"), ("building lecture slides", "presentation software"),
    ("retouching a photo", "image editor"), ("cropping a picture", "image editor"),
    ("visiting a website", "web browser"), ("reading online news", "web browser"),
]

def ARTICLE(phrase):
    word = phrase.split()[0].split("-")[0]
    if word.isupper() and len(word) > 1:
        return "an" if word[0] in "AEFHILMNORSX" else "a"
    return "an" if word[0].lower() in "aeiou" else "a"


PROMPTS = {
    "L1": "Which category does {a} {subject} belong to?",
    "L2": "Which of the following is {a} {cat}?",
    "L3": "All but one of these are {cat} examples. Which one is the odd one out?",
}
TASK_PROMPTS = {
    "L1": "Which kind of program is best suited to {subject}?",
    "L2": "Which task is best done with {a} {cat}?",
    "L3": "All but one of these tasks suit {a} {cat}. Which one does not?",
}


def slug(text):
    return "".join(c if c.isalnum() else "-" for c in text.lower()).strip("-")


class Bank:
    def __init__(self, concept, rng):
        self.concept = concept
        self.rng = rng
        self.questions = []

    def add(self, section, level, dimension, body, correct, wrong, hints, points=1.0):
        """`wrong` maps distractor text to an optional misconception tag."""
        options = [(correct, True, None)] + [(w, False, t) for w, t in wrong.items()]
        self.rng.shuffle(options)
        choices = []
        for i, (text, ok, tag) in enumerate(options):
            choice = {"id": "abcdef"[i], "body": text, "correct": ok}
            if tag:
                choice["misconception_tag"] = tag
            choices.append(choice)
        n = sum(1 for q in self.questions if q["level"] == level) + 1
        self.questions.append({
            "id": f"{self.concept}-{level.lower()}-{n:02d}",
            "section": section,
            "level": level,
            "dimension": dimension,
            "points": points,
            "body": body,
            "choices": choices,
            "hints": hints,
        })


def confusion(right, wrong):
    return f"confuses-{slug(right)}-with-{slug(wrong)}"


def classify_questions(bank, section, table, definitions, per_level, points=(1.0, 2.0, 3.0), prompts=PROMPTS):
    """Three graded templates over a (subject, category) table."""
    rng = bank.rng
    categories = sorted({c for _, c in table})
    by_cat = {c: [s for s, k in table if k == c] for c in categories}

    rows = table[:]
    rng.shuffle(rows)
    for subject, cat in (rows * 2)[:per_level["L1"]]:
        others = [c for c in categories if c != cat][:3]
        bank.add(section, "L1", "Conceptual",
                 prompts["L1"].format(a=ARTICLE(subject), subject=subject),
                 cat, {o: confusion(cat, o) for o in others},
                 [definitions[cat], f"The answer is not \"{others[0]}\"."], points[0])

    made = set()
    tries = 0
    while sum(1 for q in bank.questions if q["level"] == "L2" and q["section"] == section) < per_level["L2"]:
        tries += 1
        cat = categories[tries % len(categories)]
        pick = rng.choice(by_cat[cat])
        pool = [(s, c) for s, c in table if c != cat]
        distractors = rng.sample(pool, min(3, len(pool)))
        key = (pick, tuple(sorted(d[0] for d in distractors)))
        if key in made and tries < 500:
            continue
        made.add(key)
        bank.add(section, "L2", "Objective",
                 prompts["L2"].format(a=ARTICLE(cat), cat=cat),
                 pick, {s: confusion(cat, c) for s, c in distractors},
                 [definitions[cat], f"\"{distractors[0][0]}\" is {ARTICLE(distractors[0][1])} {distractors[0][1]}, so rule it out."], points[1])

    tries = 0
    while sum(1 for q in bank.questions if q["level"] == "L3" and q["section"] == section) < per_level["L3"]:
        tries += 1
        cat = categories[tries % len(categories)]
        if len(by_cat[cat]) < 2:
            continue
        members = rng.sample(by_cat[cat], min(3, len(by_cat[cat])))
        odd, odd_cat = rng.choice([(s, c) for s, c in table if c != cat])
        key = (odd, tuple(sorted(members)))
        if key in made and tries < 500:
            continue
        made.add(key)
        bank.add(section, "L3", "Objective",
                 prompts["L3"].format(a=ARTICLE(cat), cat=cat),
                 odd, {m: f"misses-{slug(odd_cat)}-in-{slug(cat)}-group" for m in members},
                 [definitions[cat], f"Look for the one that is {ARTICLE(odd_cat)} {odd_cat}."], points[2])


def binary_questions(bank, per_level):
    rng = bank.rng
    seen = set()
    while sum(1 for q in bank.questions if q["level"] == "L1" and q["section"] == "binary") < per_level["L1"]:
        n = rng.randint(3, 15)
        if n in seen:
            continue
        seen.add(n)
        bits = format(n, "04b")
        reversed_value = int(bits[::-1], 2)
        wrong = {str(n + 1): "off-by-one-place-value", str(sum(map(int, bits))): "counts-ones"}
        if reversed_value != n:
            wrong[str(reversed_value)] = "reads-binary-backwards"
        else:
            wrong[str(n * 2)] = "extra-place-value"
        bank.add("binary", "L1", "Conceptual", f"What is the decimal value of the binary number {bits}?",
                 str(n), wrong,
                 ["Place values from the right are 1, 2, 4, 8.", "Add the place values where the digit is 1."])
    seen = set()
    while sum(1 for q in bank.questions if q["level"] == "L2" and q["section"] == "binary") < per_level["L2"]:
        n = rng.randint(17, 250)
        if n in seen:
            continue
        seen.add(n)
        bits = format(n, "08b")
        wrong = {format(n ^ 1, "08b"): "off-by-one-place-value",
                 bits[::-1] if bits[::-1] != bits else format(n ^ 2, "08b"): "reads-binary-backwards",
                 format((n * 2) % 256 or 1, "08b"): "extra-place-value"}
        wrong.pop(bits, None)
        bank.add("binary", "L2", "Objective", f"Which 8-bit binary number represents decimal {n}?",
                 bits, wrong,
                 ["Subtract the largest power of two that fits, then repeat.",
                  f"The largest power of two not above {n} is {1 << (n.bit_length() - 1)}."], 2.0)
    seen = set()
    while sum(1 for q in bank.questions if q["level"] == "L3" and q["section"] == "binary") < per_level["L3"]:
        a, b = rng.randint(5, 60), rng.randint(5, 60)
        if (a, b) in seen or (b, a) in seen:
            continue
        seen.add((a, b))
        total = a + b
        wrong = {format(a | b, "b"): "adds-without-carry",
                 format(total + 1, "b"): "off-by-one-place-value",
                 format(total, "b")[::-1] if format(total, "b")[::-1] != format(total, "b") else format(total + 2, "b"): "reads-binary-backwards"}
        wrong.pop(format(total, "b"), None)
        if len(wrong) < 2:
            continue
        bank.add("binary", "L3", "Objective",
                 f"What is {format(a, 'b')} + {format(b, 'b')} in binary?",
                 format(total, "b"), wrong,
                 ["1 + 1 is 10 in binary: write 0 and carry 1.", f"Check in decimal: {a} + {b}."], 3.0)


def unit_questions(bank, per_level):
    rng = bank.rng
    l1 = [
        ("How many bits make up one byte?", "8", {"4": "confuses-nibble-with-byte", "10": "decimal-kilo", "16": "confuses-word-with-byte"}),
        ("How many bytes are in one kibibyte (KiB)?", "1024", {"1000": "decimal-kilo", "8": "bits-vs-bytes", "100": "decimal-kilo"}),
        ("Which unit is the largest?", "terabyte", {"gigabyte": "unit-order", "megabyte": "unit-order", "kilobyte": "unit-order"}),
        ("Which unit is the smallest?", "bit", {"byte": "bits-vs-bytes", "kilobyte": "unit-order", "nibble": "unit-order"}),
        ("How many bits are in a nibble?", "4", {"8": "confuses-nibble-with-byte", "2": "unit-order", "16": "unit-order"}),
        ("Network speeds such as 100 Mbps are measured in what?", "megabits per second", {"megabytes per second": "bits-vs-bytes", "megahertz": "confuses-speed-units", "megabytes": "bits-vs-bytes"}),
        ("How many distinct values can one byte hold?", "256", {"255": "off-by-one-range", "8": "bits-vs-values", "128": "extra-place-value"}),
        ("What is the largest number one byte can hold when unsigned?", "255", {"256": "off-by-one-range", "128": "extra-place-value", "8": "bits-vs-values"}),
        ("How many bytes are in one mebibyte (MiB)?", "1048576", {"1000000": "decimal-kilo", "1024": "unit-order", "8388608": "bits-vs-bytes"}),
        ("Storage sizes such as 500 GB are usually given in what?", "bytes", {"bits": "bits-vs-bytes", "hertz": "confuses-speed-units", "pixels": "unit-order"}),
        ("How many values can 4 bits represent?", "16", {"15": "off-by-one-range", "4": "bits-vs-values", "8": "extra-place-value"}),
        ("Which prefix means 1024 in binary units?", "kibi", {"kilo": "decimal-kilo", "mega": "unit-order", "mebi": "unit-order"}),
    ]
    for body, right, wrong in (l1 * 2)[:per_level["L1"]]:
        bank.add("units", "L1", "Conceptual", body, right, wrong,
                 ["A byte is 8 bits; binary prefixes step by 1024.", "Count from the smallest unit upward."])
    seen = set()
    while sum(1 for q in bank.questions if q["level"] == "L2" and q["section"] == "units") < per_level["L2"]:
        n = rng.randint(2, 40)
        kind = rng.choice(["bytes-to-bits", "kib-to-bytes"])
        if (n, kind) in seen:
            continue
        seen.add((n, kind))
        if kind == "bytes-to-bits":
            bank.add("units", "L2", "Objective", f"How many bits are in {n} bytes?", str(n * 8),
                     {str(n): "bits-vs-bytes", str(n * 4): "confuses-nibble-with-byte", str(n * 10): "decimal-kilo"},
                     ["Each byte is 8 bits.", f"Multiply {n} by 8."], 2.0)
        else:
            bank.add("units", "L2", "Objective", f"How many bytes are in {n} KiB?", str(n * 1024),
                     {str(n * 1000): "decimal-kilo", str(n * 8): "bits-vs-bytes", str(n * 1024 * 8): "bits-vs-bytes"},
                     ["One KiB is 1024 bytes.", f"Multiply {n} by 1024."], 2.0)
    seen = set()
    while sum(1 for q in bank.questions if q["level"] == "L3" and q["section"] == "units") < per_level["L3"]:
        size_mb = rng.choice([8, 16, 24, 40, 80, 100, 120, 200])
        speed_mbps = rng.choice([8, 16, 32, 40, 64, 80])
        if (size_mb, speed_mbps) in seen:
            continue
        seen.add((size_mb, speed_mbps))
        seconds = size_mb * 8 / speed_mbps
        fmt = lambda x: f"{x:g} s"
        wrong = {fmt(size_mb / speed_mbps): "bits-vs-bytes", fmt(seconds * 8): "bits-vs-bytes-twice",
                 fmt(speed_mbps / size_mb): "inverts-rate"}
        wrong.pop(fmt(seconds), None)
        if len(wrong) < 2:
            continue
        bank.add("units", "L3", "Objective",
                 f"A {size_mb} MB file is sent over a {speed_mbps} Mbps link. Ignoring overhead, how long does it take?",
                 fmt(seconds), wrong,
                 ["Link speed is in bits, file size in bytes.", f"{size_mb} MB is {size_mb * 8} megabits."], 3.0)


def variant(style, title, topic, links, external):
    """Five renderings of the same material, each aimed at one style."""
    link_list = links + [external]
    if style == "SS":
        return {"blocks": [
            {"kind": "video-ref", "body": f"Short clip: {title} in two minutes.", "links": [external]},
            {"kind": "exercise", "body": f"Quick-fire round: try the interactive {topic} challenge before reading on."},
            {"kind": "image-ref", "body": f"Illustrated map of {topic}.", "links": links},
        ]}
    if style == "GOA":
        return {"blocks": [
            {"kind": "text", "body": f"Goal: by the end of this lesson you can explain {topic} and pass its post-test."},
            {"kind": "text", "body": f"Checklist for {title}: key terms, worked examples, one self-test.", "links": links},
            {"kind": "exercise", "body": f"Self-test on {topic}; aim for a Very good band."},
        ]}
    if style == "EIA":
        return {"blocks": [
            {"kind": "text", "body": f"Why does {topic} matter? Start from a real problem and work backwards.", "links": [external]},
            {"kind": "exercise", "body": f"Investigate: find two everyday devices that depend on {topic}."},
            {"kind": "text", "body": "Compare your findings with the related lessons.", "links": links},
        ]}
    if style == "CA":
        return {"blocks": [
            {"kind": "text", "body": f"Step 1. Definitions used in {title}."},
            {"kind": "text", "body": f"Step 2. Worked examples of {topic}, one per section.", "links": links},
            {"kind": "exercise", "body": "Step 3. Complete every practice item in order."},
            {"kind": "text", "body": "Step 4. Further reading.", "links": [external]},
        ]}
    return {"blocks": [
        {"kind": "text", "body": f"Principles behind {topic} and how they connect to the rest of the course.", "links": link_list},
        {"kind": "image-ref", "body": f"Concept diagram relating the parts of {title}."},
        {"kind": "exercise", "body": f"Explain {topic} in your own words, then check against the diagram."},
    ]}


DEFS = {
    "ipo": {
        "input": "Input devices send data into the computer.",
        "output": "Output devices present results from the computer.",
        "processing": "Processing devices carry out instructions on data.",
        "storage": "Storage devices keep data for later use.",
    },
    "hw-sw": {
        "hardware": "Hardware is the physical equipment you can touch.",
        "software": "Software is a set of instructions the hardware runs.",
    },
    "cpu-memory": {
        "processor part": "Processor parts execute or coordinate instructions.",
        "volatile memory": "Volatile memory loses its contents when power is off.",
        "non-volatile memory": "Non-volatile memory keeps its contents without power.",
    },
    "storage": {
        "magnetic": "Magnetic media record data as magnetised regions.",
        "optical": "Optical media are read with a laser.",
        "solid-state": "Solid-state media store data in flash chips with no moving parts.",
    },
    "io-devices": {
        "video": "Video connectors carry a picture to a display.",
        "general peripherals": "General peripheral connectors attach many kinds of device.",
        "networking": "Networking connectors link the computer to other computers.",
        "sound": "Sound connectors carry audio.",
    },
    "system-software": {
        "operating system": "An operating system manages the hardware and runs other programs.",
        "utility": "Utilities maintain or protect the computer.",
        "device driver": "A device driver lets the operating system talk to one device.",
    },
    "applications": {
        "word processor": "Word processors create and format text documents.",
        "spreadsheet": "Spreadsheets calculate with rows and columns of numbers.",
        "database": "Databases store and query structured records.",
        "presentation software": "Presentation software builds slide shows.",
        "image editor": "Image editors change pictures.",
        "web browser": "Web browsers display pages from the web.",
    },
}


def build():
    rng = random.Random(20240611)
    concepts = []

    def concept(cid, title, topic, sections, key, fill, links, external):
        bank = Bank(cid, rng)
        fill(bank)
        concepts.append({
            "id": cid,
            "title": title,
            "sections": sections,
            "key_section": key,
            "variants": {s: variant(s, title, topic, links, external) for s in STYLES},
            "questions": sorted(bank.questions, key=lambda q: q["id"]),
        })

    half = {level: n // 2 for level, n in PER_LEVEL.items()}
    third = [{level: n // 3 + (i < n % 3) for level, n in PER_LEVEL.items()} for i in range(3)]

    def fill_basics(bank):
        classify_questions(bank, "ipo", IPO, DEFS["ipo"], half)
        classify_questions(bank, "hw-sw", HWSW + [("user manual", "documentation"), ("licence text", "documentation"), ("help page", "documentation")],
                           {**DEFS["hw-sw"], "documentation": "Documentation explains how to use a system."}, half)

    def fill_hardware(bank):
        classify_questions(bank, "cpu-memory", CPU_MEM, DEFS["cpu-memory"], third[0])
        classify_questions(bank, "storage", STORAGE, DEFS["storage"], third[1])
        classify_questions(bank, "io-devices", PORTS, DEFS["io-devices"], third[2])

    def fill_data(bank):
        binary_questions(bank, half)
        unit_questions(bank, half)

    def fill_software(bank):
        classify_questions(bank, "system-software", SYSTEM_SW, DEFS["system-software"], half)
        classify_questions(bank, "applications", APPS, DEFS["applications"], half, prompts=TASK_PROMPTS)

    concept("computer-basics", "What is a computer?", "the input-process-output cycle",
            [{"id": "ipo", "title": "Input, processing, output, storage", "weights": weights(3.0, EIA=2.5)},
             {"id": "hw-sw", "title": "Hardware and software", "weights": weights(1.0, DLA=2.0)}],
            "ipo", fill_basics, ["hardware", "software"], "https://en.wikipedia.org/wiki/Computer")
    concept("hardware", "Inside the computer", "computer hardware",
            [{"id": "cpu-memory", "title": "Processor and memory", "weights": weights(3.0)},
             {"id": "storage", "title": "Storage media", "weights": weights(2.0, GOA=1.5)},
             {"id": "io-devices", "title": "Ports and connectors", "weights": weights(1.0, SS=2.0)}],
            "cpu-memory", fill_hardware, ["computer-basics", "data-representation"],
            "https://en.wikipedia.org/wiki/Computer_hardware")
    concept("data-representation", "Bits and bytes", "binary data",
            [{"id": "binary", "title": "Binary numbers", "weights": weights(3.0, CA=4.0)},
             {"id": "units", "title": "Units of data", "weights": weights(1.0)}],
            "binary", fill_data, ["computer-basics", "hardware"], "https://en.wikipedia.org/wiki/Binary_number")
    concept("software", "Programs and operating systems", "software",
            [{"id": "system-software", "title": "System software", "weights": weights(2.0, DLA=3.0)},
             {"id": "applications", "title": "Application software", "weights": weights(1.0, GOA=1.5)}],
            "system-software", fill_software, ["hardware", "computer-basics"],
            "https://en.wikipedia.org/wiki/Software")

    return {
        "id": "demo-computing",
        "title": "Introduction to computers",
        "concepts": concepts,
        "prerequisites": {
            "hardware": ["computer-basics"],
            "data-representation": ["computer-basics"],
            "software": ["hardware"],
        },
        "mastery_band": "Good",
        "flag_after_attempts": 3,
    }


if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "packs" / "demo-computing.json"
    out.write_text(json.dumps(build(), indent=1, ensure_ascii=False) + "\n")
    pack = json.loads(out.read_text())
    for c in pack["concepts"]:
        levels = {}
        for q in c["questions"]:
            levels.setdefault(q["level"], set()).add(q["section"])
        counts = {l: sum(1 for q in c["questions"] if q["level"] == l) for l in ("L1", "L2", "L3")}
        print(c["id"], counts, {l: sorted(s) for l, s in sorted(levels.items())})
