#!/usr/bin/env python3
"""SHA-256 of whitespace-normalized prompts. Reads a JSON list of strings on
stdin, prints one lowercase hex digest per line."""
import hashlib
import json
import re
import sys

for text in json.load(sys.stdin):
    normalized = re.sub(r"[ \t\n\v\f\r]+", " ", text).strip(" ")
    print(hashlib.sha256(normalized.encode()).hexdigest())
