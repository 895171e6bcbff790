"""Grouping of CR variants that denote the same cited work.

Candidate pairs are blocked by reference publication year (variants from
different years never cluster), compared with a normalized Levenshtein
similarity over "author, source", and gated by volume/page/DOI equality
where enabled. A union-find over accepted pairs yields the clusters;
merging collapses each cluster onto its highest-NCR member.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import DomainError
from .model import CitedReference, CRVariant, Dataset

# RPY blocks larger than this are sub-blocked by the author's first
# character to keep the quadratic pair scan tractable (documented
# fidelity/performance trade).
DEFAULT_BLOCK_CAP = 20000


@dataclass(frozen=True)
class ClusterConfig:
    threshold: float
    use_volume: bool = False
    use_page: bool = False
    use_doi: bool = False

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise DomainError(f"threshold {self.threshold} outside [0, 1]")


def levenshtein(a: str, b: str) -> int:
    """Edit distance, two-row dynamic program."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def _name_string(ref: CitedReference) -> str:
    # No dangling separator when the source is absent: two references with
    # no characters in common must score 0.
    if ref.source:
        return f"{ref.author}, {ref.source}".lower()
    return ref.author.lower()


def similarity(a: CitedReference, b: CitedReference) -> float:
    """Similarity in [0, 1]: 1 for equal normalized keys, otherwise
    normalized Levenshtein over the lower-cased "author, source" string."""
    if a.key == b.key:
        return 1.0
    sa, sb = _name_string(a), _name_string(b)
    longest = max(len(sa), len(sb))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(sa, sb) / longest


def compatible(a: CitedReference, b: CitedReference, config: ClusterConfig) -> bool:
    """Field gate for clustering: same (present) RPY, and each enabled
    field equal whenever both sides carry it. An absent field never
    blocks."""
    if a.rpy is None or b.rpy is None or a.rpy != b.rpy:
        return False
    checks = (
        (config.use_volume, a.volume, b.volume),
        (config.use_page, a.page, b.page),
        (config.use_doi, a.doi, b.doi),
    )
    for enabled, fa, fb in checks:
        if enabled and fa is not None and fb is not None and fa != fb:
            return False
    return True


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # Smaller index wins so cluster ids are canonical.
            if ra > rb:
                ra, rb = rb, ra
            self.parent[rb] = ra


def cluster_crs(
    dataset: Dataset, config: ClusterConfig, block_cap: int = DEFAULT_BLOCK_CAP
) -> Dataset:
    """Assign cluster ids: union-find within each RPY block over pairs
    that pass the field gate and reach the similarity threshold.

    Deterministic and insertion-order independent: variants are indexed in
    canonical (rpy, key) order and a cluster's id is its smallest member
    index. Variants without an RPY are always singletons.
    """
    ordered = dataset.sorted_variants()
    uf = _UnionFind(len(ordered))

    blocks: dict[int, list[int]] = {}
    for idx, v in enumerate(ordered):
        if v.rpy is not None:
            blocks.setdefault(v.rpy, []).append(idx)

    for rpy in sorted(blocks):
        members = blocks[rpy]
        if len(members) > block_cap:
            sub: dict[str, list[int]] = {}
            for idx in members:
                sub.setdefault(ordered[idx].reference.author[:1], []).append(idx)
            groups = [sub[k] for k in sorted(sub)]
        else:
            groups = [members]
        for group in groups:
            _cluster_block(ordered, group, config, uf)

    clustered = [
        replace(v, cluster_id=uf.find(idx)) for idx, v in enumerate(ordered)
    ]
    note = (
        f"cluster threshold={config.threshold}"
        f" volume={'true' if config.use_volume else 'false'}"
        f" page={'true' if config.use_page else 'false'}"
        f" doi={'true' if config.use_doi else 'false'}"
    )
    return dataset.with_variants(clustered, note)


def _cluster_block(
    ordered: list[CRVariant], group: list[int], config: ClusterConfig, uf: _UnionFind
) -> None:
    names = {idx: _name_string(ordered[idx].reference) for idx in group}
    for pos, i in enumerate(group):
        ref_i = ordered[i].reference
        len_i = len(names[i])
        for j in group[pos + 1 :]:
            if uf.find(i) == uf.find(j):
                continue
            ref_j = ordered[j].reference
            if not compatible(ref_i, ref_j, config):
                continue
            # Length gap alone bounds similarity from above; skip the DP
            # when even that bound misses the threshold.
            longest = max(len_i, len(names[j]))
            if longest and 1.0 - abs(len_i - len(names[j])) / longest < config.threshold:
                continue
            if similarity(ref_i, ref_j) >= config.threshold:
                uf.union(i, j)


def merge_clusters(dataset: Dataset) -> Dataset:
    """Collapse each cluster onto one variant: NCR summed, representative
    = highest-NCR member (ties: lexicographically smallest key), citing
    years pooled when tracked (else the members' max count). Variants
    without a cluster id pass through as singletons."""
    groups: dict[object, list[CRVariant]] = {}
    for v in dataset.sorted_variants():
        gid = v.cluster_id if v.cluster_id is not None else ("solo", v.key)
        groups.setdefault(gid, []).append(v)

    merged: list[CRVariant] = []
    for members in groups.values():
        if len(members) == 1:
            merged.append(members[0])
            continue
        rep = min(members, key=lambda v: (-v.ncr, v.key))
        total = sum(v.ncr for v in members)
        if all(v.py_years is not None for v in members):
            years = frozenset().union(*(v.py_years for v in members))
            n_years = len(years)
        else:
            years = None
            n_years = max(v.n_py_years for v in members)
        merged.append(
            replace(rep, ncr=total, n_py_years=n_years, py_years=years)
        )
    return dataset.with_variants(merged, "merge")


def remove_cr(dataset: Dataset, lo: int, hi: int) -> Dataset:
    """Drop every variant with lo <= ncr <= hi (inclusive). n_cr_total is
    untouched: it records the pre-removal import total."""
    if lo > hi:
        raise DomainError(f"removeCR range lo > hi: [{lo}, {hi}]")
    kept = [v for v in dataset.variants.values() if not lo <= v.ncr <= hi]
    return dataset.with_variants(kept, f"removeCR [{lo},{hi}]")
