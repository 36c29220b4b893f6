"""schemex: induce explicit schemas from example sets.

The engine clusters examples, abstracts each cluster into dimensions and
attributes grounded in verbatim evidence, then refines the schema by
contrasting its own generations against held-out gold examples. Every
model claim is checked machine-side; schemas are versioned so each
refinement is an auditable revision.
"""

__version__ = "0.1.0"
