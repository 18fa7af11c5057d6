"""Code comment generation from combined semantic and syntactic token
embeddings, with the training, extraction, and evaluation stages exposed as
a CLI pipeline."""

__version__ = "0.1.0"
