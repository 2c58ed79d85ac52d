"""taskscope: precise task-scoped authorization for tool-calling agents.

Submitting a signed natural-language task implicitly authorizes exactly the
concrete tool calls its faithful execution implies — operators *and*
operands.  Each service derives per-call symbolic policies from the task,
compiles them to enforcement rules, and verifies every incoming call's
operands against task-implied computation through signed provenance
envelopes.  Everything else escalates to the user; nothing is allowed by
omission.
"""

__version__ = "0.1.0"
