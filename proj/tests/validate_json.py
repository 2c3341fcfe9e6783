"""Validate a JSON document against a schema; exit 1 with the reason if invalid."""
import json
import sys

import jsonschema

with open(sys.argv[1]) as f:
    schema = json.load(f)
with open(sys.argv[2]) as f:
    doc = json.load(f)
try:
    jsonschema.validate(doc, schema)
except jsonschema.ValidationError as e:
    print(f"{sys.argv[2]}: {e.message}")
    sys.exit(1)
