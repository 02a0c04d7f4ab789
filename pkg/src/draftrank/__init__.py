"""draftrank: contrastive preference learning for card-draft decisions."""

__version__ = "0.1.0"
