"""
Line-protocol test double for the stdio transport

Reads {"id", "source"} lines and answers {"id", "hypothesis"}. By default the
hypothesis is the source. Options:
    --after-sep     answer with the text after the separator (an identity generator)
    --drop ID       never answer this id (repeatable)
    --swap          answer requests in pairs, second one first
"""

import argparse
import json
import sys


def answer(request, after_sep):
    source = request["source"]
    if after_sep and "<sep>" in source:
        source = source.split("<sep>", 1)[1].strip()
    return json.dumps({"id": request["id"], "hypothesis": source}, ensure_ascii=False, separators=(",", ":"))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--after-sep", action="store_true")
    parser.add_argument("--drop", type=int, action="append", default=[])
    parser.add_argument("--swap", action="store_true", help="answer consecutive requests in swapped order")
    args = parser.parse_args()

    held = None
    for line in sys.stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        if request["id"] in args.drop:
            continue
        reply = answer(request, args.after_sep)
        if args.swap and held is None:
            held = reply
            continue
        sys.stdout.write(reply + "\n")
        if held is not None:
            sys.stdout.write(held + "\n")
            held = None
        sys.stdout.flush()
    if held is not None:
        sys.stdout.write(held + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
