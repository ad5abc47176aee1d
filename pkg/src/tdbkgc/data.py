"""Triple files, vocabularies and the filter index."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLITS = ("train", "valid", "test")
BUNDLED = Path(__file__).parent / "datasets"


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    entities: list[str]
    relations: list[str]
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    name: str = ""
    n_base_relations: int | None = None
    filter: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.entity_ids = {e: i for i, e in enumerate(self.entities)}
        self.relation_ids = {r: i for i, r in enumerate(self.relations)}
        if self.n_base_relations is None:
            self.n_base_relations = len(self.relations)
        if not self.filter:
            self.filter = build_filter_index(self)

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    @property
    def has_inverse(self) -> bool:
        return self.n_relations != self.n_base_relations

    def split(self, name: str) -> np.ndarray:
        if name not in SPLITS:
            raise DatasetError(f"unknown split {name!r}")
        return getattr(self, name)

    def stats(self) -> dict:
        return {
            "entities": self.n_entities,
            "relations": self.n_base_relations,
            "train": len(self.train),
            "valid": len(self.valid),
            "test": len(self.test),
        }

    def to_lines(self, split: str) -> list[str]:
        return [
            f"{self.entities[h]}\t{self.relations[r]}\t{self.entities[t]}"
            for h, r, t in self.split(split)
        ]

    def with_inverse_relations(self) -> "Dataset":
        """Copy whose training split also holds ``(t, r_inv, h)`` for each triple."""
        if self.has_inverse:
            return self
        n = self.n_relations
        inv = self.train[:, [2, 1, 0]].copy()
        inv[:, 1] += n
        rels = self.relations + [f"{r}_reverse" for r in self.relations]
        out = Dataset(self.entities, rels, np.concatenate([self.train, inv]), self.valid,
                      self.test, self.name, n_base_relations=n, filter={})
        return out


def _read_split(path: Path, ent: dict, rel: dict) -> list[tuple[int, int, int]]:
    triples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) != 3:
                raise DatasetError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
            h, r, t = (f.strip() for f in fields)
            triples.append((ent.setdefault(h, len(ent)), rel.setdefault(r, len(rel)),
                            ent.setdefault(t, len(ent))))
    return triples


def resolve_dataset_dir(spec) -> Path:
    """A directory path, or the name of a bundled dataset (e.g. ``kinship``)."""
    p = Path(spec)
    if p.is_dir():
        return p
    if (BUNDLED / str(spec)).is_dir():
        return BUNDLED / str(spec)
    raise DatasetError(f"dataset directory not found: {spec}")


def load_dataset(directory) -> Dataset:
    directory = resolve_dataset_dir(directory)
    for s in SPLITS:
        if not (directory / f"{s}.txt").is_file():
            raise DatasetError(f"missing {s}.txt in {directory}")
    ent: dict[str, int] = {}
    rel: dict[str, int] = {}
    parts = {s: _read_split(directory / f"{s}.txt", ent, rel) for s in SPLITS}
    if not parts["train"]:
        raise DatasetError("empty training split")
    arrays = {s: np.asarray(parts[s], dtype=np.int64).reshape(-1, 3) for s in SPLITS}
    return Dataset(list(ent), list(rel), arrays["train"], arrays["valid"], arrays["test"],
                   name=directory.name)


def build_filter_index(dataset: Dataset) -> dict[tuple[int, int], set[int]]:
    """``(head, relation) -> {tails}`` over every split."""
    index: dict[tuple[int, int], set[int]] = defaultdict(set)
    for s in SPLITS:
        for h, r, t in dataset.split(s):
            index[(int(h), int(r))].add(int(t))
    if dataset.has_inverse:
        n = dataset.n_base_relations
        for s in SPLITS:
            for h, r, t in dataset.split(s):
                if r < n:
                    index[(int(t), int(r) + n)].add(int(h))
    return dict(index)


def write_vocab(dataset: Dataset, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for fname, names in (("entities.dict", dataset.entities), ("relations.dict", dataset.relations)):
        with open(directory / fname, "w", encoding="utf-8") as fh:
            for i, name in enumerate(names):
                fh.write(f"{i}\t{name}\n")
