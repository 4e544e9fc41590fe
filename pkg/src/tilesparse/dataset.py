"""Directory-per-class datasets."""
from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import DataError

IMAGE_EXTENSIONS = (".pgm", ".pnm", ".png")


@dataclass(frozen=True)
class Sample:
    image_id: str
    path: str
    label: str


@dataclass(frozen=True)
class LabeledDataset:
    samples: tuple
    class_names: tuple

    def __len__(self):
        return len(self.samples)

    def label_indices(self) -> list[int]:
        return [self.class_names.index(s.label) for s in self.samples]

    def counts(self) -> dict:
        out = {c: 0 for c in self.class_names}
        for s in self.samples:
            out[s.label] += 1
        return out

    def subset(self, class_names) -> "LabeledDataset":
        keep = [c for c in self.class_names if c in set(class_names)]
        return LabeledDataset(tuple(s for s in self.samples if s.label in keep), tuple(keep))


def ingest_dataset(root) -> LabeledDataset:
    """One class per subdirectory of ``root``; classes and files sorted by name.

    Only files with a PGM/PNG extension are taken; hidden entries are skipped.
    """
    if not os.path.isdir(root):
        raise DataError(f"data directory {root} does not exist")
    classes = sorted(d for d in os.listdir(root) if not d.startswith(".") and os.path.isdir(os.path.join(root, d)))
    if not classes:
        raise DataError(f"data directory {root} has no class subdirectories")
    samples = []
    for c in classes:
        d = os.path.join(root, c)
        files = sorted(f for f in os.listdir(d)
                       if not f.startswith(".") and f.lower().endswith(IMAGE_EXTENSIONS)
                       and os.path.isfile(os.path.join(d, f)))
        if not files:
            raise DataError(f"class directory {d} contains no images")
        samples += [Sample(f"{c}/{os.path.splitext(f)[0]}", os.path.join(d, f), c) for f in files]
    ids = [s.image_id for s in samples]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate image ids (same file stem with different extensions)")
    return LabeledDataset(tuple(samples), tuple(classes))
