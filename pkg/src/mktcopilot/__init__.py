"""Marketing analytics copilot engine.

Grounded question answering over an embedded document corpus, SQL generation
with exact-match scoring, rule-based attribution explanations, model-judged
evaluation, and an intent router, behind one HTTP service and CLI.
"""

__version__ = "0.1.0"
