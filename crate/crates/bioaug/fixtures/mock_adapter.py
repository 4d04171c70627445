#!/usr/bin/env python3
"""Reference adapter process: memorizes fit pairs and echoes their targets.

Speaks the line-delimited JSON protocol on stdin/stdout:
  {"cmd": "fit", "pairs": [...], "config": {...}}      -> {"ok": true}
  {"cmd": "generate", "source": "...", "params": {...}} -> {"ok": true, "result": {...}}
"""
import json
import sys

memory = {}
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    try:
        msg = json.loads(line)
        if msg["cmd"] == "fit":
            memory.clear()
            for pair in msg["pairs"]:
                memory[pair["source"]] = pair["target"]
            reply = {"ok": True}
        elif msg["cmd"] == "generate":
            source = msg["source"]
            n_aug = msg["params"]["n_aug"]
            text = memory.get(source)
            if text is None:
                text = " ".join(p for p in source.split() if p != "<mask>")
            reply = {"ok": True, "result": {"texts": [text] * n_aug, "truncated": False}}
        else:
            reply = {"ok": False, "error": "unknown cmd %r" % msg.get("cmd")}
    except Exception as exc:  # noqa: BLE001 - report everything to the caller
        reply = {"ok": False, "error": str(exc)}
    sys.stdout.write(json.dumps(reply) + "\n")
    sys.stdout.flush()
