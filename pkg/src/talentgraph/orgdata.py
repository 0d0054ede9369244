"""Email logs, HRIS roster, and the seeded synthetic organization."""

from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

log = logging.getLogger(__name__)

FAMILY_NAMES = ("res", "biz", "dev", "sal", "mnq")
ROLE_NAMES = ("leader", "senior", "member")


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class ParseError(DataError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


class ReferentialIntegrityError(DataError):
    pass


@dataclass(frozen=True)
class EmailRecord:
    sender: str
    recipient: str
    timestamp: int
    subject_tokens: tuple[str, ...]


@dataclass(frozen=True)
class Employee:
    id: str
    job_family: str
    role: str
    level: str = ""


@dataclass(frozen=True)
class OrgRoster:
    employees: tuple[Employee, ...]

    def __post_init__(self):
        ids = [e.id for e in self.employees]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate employee ids in roster")

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.employees]

    def by_id(self) -> dict[str, Employee]:
        return {e.id: e for e in self.employees}

    def cell(self, emp_id: str) -> tuple[str, str]:
        e = self.by_id()[emp_id]
        return e.job_family, e.role

    def families(self) -> list[str]:
        return sorted({e.job_family for e in self.employees})

    def roles(self) -> list[str]:
        return sorted({e.role for e in self.employees})


@dataclass
class LoadResult:
    records: list[EmailRecord]
    dropped: int


def default_tokenizer(subject: str) -> list[str]:
    return subject.lower().split()


def load_roster(path) -> OrgRoster:
    path = Path(path)
    employees = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["employee_id", "job_family", "role", "level"]:
            raise ParseError(path, 1, f"unexpected header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4 or not row[0]:
                raise ParseError(path, lineno, f"expected 4 fields, got {len(row)}")
            employees.append(Employee(*row))
    return OrgRoster(tuple(employees))


def load_email_log(
    path,
    roster: OrgRoster | None = None,
    tokenizer: Callable[[str], list[str]] = default_tokenizer,
) -> LoadResult:
    """Parse ``emails.csv``.

    Self-addressed rows and rows whose subject tokenizes to nothing are
    dropped and counted. Any malformed row aborts the whole load.
    """
    path = Path(path)
    known = set(roster.ids) if roster is not None else None
    records: list[EmailRecord] = []
    dropped = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sender", "recipient", "timestamp", "subject"]:
            raise ParseError(path, 1, f"unexpected header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ParseError(path, lineno, f"expected 4 fields, got {len(row)}")
            sender, recipient, ts, subject = row
            if not sender or not recipient:
                raise ParseError(path, lineno, "empty employee id")
            try:
                timestamp = int(ts)
            except ValueError:
                raise ParseError(path, lineno, f"bad timestamp {ts!r}") from None
            if known is not None:
                for emp in (sender, recipient):
                    if emp not in known:
                        raise ReferentialIntegrityError(
                            f"{path}:{lineno}: unknown employee id {emp!r}"
                        )
            tokens = tuple(t.lower() for t in tokenizer(subject))
            if sender == recipient or not tokens:
                dropped += 1
                continue
            records.append(EmailRecord(sender, recipient, timestamp, tokens))
    if dropped:
        log.info("dropped %d rows from %s", dropped, path)
    return LoadResult(records, dropped)


def write_email_log(path, records: Iterable[EmailRecord]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sender", "recipient", "timestamp", "subject"])
        for r in records:
            w.writerow([r.sender, r.recipient, r.timestamp, " ".join(r.subject_tokens)])


def write_roster(path, roster: OrgRoster) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["employee_id", "job_family", "role", "level"])
        for e in roster.employees:
            w.writerow([e.id, e.job_family, e.role, e.level])


def positive_pairs(roster: OrgRoster) -> set[frozenset[str]]:
    """Unordered pairs sharing both job family and role."""
    groups: dict[tuple[str, str], list[str]] = {}
    for e in roster.employees:
        groups.setdefault((e.job_family, e.role), []).append(e.id)
    pairs = set()
    for members in groups.values():
        for a, b in itertools.combinations(members, 2):
            pairs.add(frozenset((a, b)))
    return pairs


# --- synthetic organization -------------------------------------------------


def _per_family(value, n_families: int, name: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) * n_families
    value = tuple(float(v) for v in value)
    if len(value) != n_families:
        raise ValueError(f"{name} needs {n_families} entries, got {len(value)}")
    return value


@dataclass
class SyntheticOrgConfig:
    """Knobs for the planted organization.

    ``text_informativeness`` and ``structure_informativeness`` are per family
    (scalar broadcasts). The defaults plant a "sales-like" family (index 3:
    background-only subjects, noise-free structure) and a "research-like"
    family (index 0: both views informative).
    """

    n_employees: int = 300
    n_families: int = 5
    n_roles_per_family: int = 3
    vocab_per_family: int = 40
    background_vocab: int = 60
    topic_overlap: float = 0.1
    intra_role_email_rate: float = 1.0
    cross_family_email_rate: float = 0.01
    text_informativeness: tuple[float, ...] | float = (0.9, 0.85, 0.85, 0.0, 0.85)
    structure_informativeness: tuple[float, ...] | float = (0.4, 0.5, 0.5, 1.0, 0.5)
    role_text_share: float = 0.5
    role_shares: tuple[float, ...] = (0.2, 0.3, 0.5)
    subject_length: tuple[int, int] = (5, 10)
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("n_employees", "n_families", "n_roles_per_family",
                     "vocab_per_family", "background_vocab"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("intra_role_email_rate", "cross_family_email_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("topic_overlap", "role_text_share"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        self.text_informativeness = _per_family(
            self.text_informativeness, self.n_families, "text_informativeness")
        self.structure_informativeness = _per_family(
            self.structure_informativeness, self.n_families, "structure_informativeness")
        for v in self.text_informativeness + self.structure_informativeness:
            if not 0.0 <= v <= 1.0:
                raise ValueError("informativeness fractions must lie in [0, 1]")
        if len(self.role_shares) != self.n_roles_per_family:
            self.role_shares = (1.0,) * self.n_roles_per_family
        lo, hi = self.subject_length
        if not 1 <= lo <= hi:
            raise ValueError("subject_length must satisfy 1 <= min <= max")

    def family_names(self) -> list[str]:
        if self.n_families <= len(FAMILY_NAMES):
            return list(FAMILY_NAMES[: self.n_families])
        return [f"fam{k}" for k in range(self.n_families)]

    def role_names(self) -> list[str]:
        if self.n_roles_per_family <= len(ROLE_NAMES):
            return list(ROLE_NAMES[: self.n_roles_per_family])
        return ["leader"] + [f"role{k}" for k in range(1, self.n_roles_per_family)]


@dataclass
class SyntheticOrg:
    roster: OrgRoster
    records: list[EmailRecord]
    family_vocab: dict[str, list[str]]
    background: list[str]
    rates: np.ndarray = field(repr=False)  # expected emails per unordered pair, n x n


def _assign_cells(cfg: SyntheticOrgConfig, rng: np.random.Generator):
    n, F = cfg.n_employees, cfg.n_families
    fam = np.arange(n) % F
    role = np.empty(n, dtype=int)
    shares = np.asarray(cfg.role_shares, float)
    shares = shares / shares.sum()
    for f in range(F):
        idx = np.flatnonzero(fam == f)
        counts = np.floor(shares * len(idx)).astype(int)
        counts[-1] += len(idx) - counts.sum()
        role[idx] = np.repeat(np.arange(len(shares)), counts)
    perm = rng.permutation(n)
    return fam[perm], role[perm]


def pair_rates(cfg: SyntheticOrgConfig, fam: np.ndarray, role: np.ndarray) -> np.ndarray:
    """Expected email count for every unordered pair (symmetric, zero diagonal).

    A pair is in the planted neighbourhood when both share a (family, role)
    cell, when both are leaders, or when one is the other's family leader.
    Each pair's planted rate is blended toward the global mean rate by the
    less structured of the two families.
    """
    same_fam = fam[:, None] == fam[None, :]
    same_role = role[:, None] == role[None, :]
    leader = role == 0
    neighbourhood = (same_fam & same_role) | (leader[:, None] & leader[None, :])
    neighbourhood |= same_fam & (leader[:, None] | leader[None, :])
    base = np.where(neighbourhood, cfg.intra_role_email_rate, cfg.cross_family_email_rate)
    np.fill_diagonal(base, 0.0)
    n = len(fam)
    mean_rate = base.sum() / max(n * (n - 1), 1)
    s = np.asarray(cfg.structure_informativeness)[fam]
    s_pair = np.minimum(s[:, None], s[None, :])
    rates = s_pair * base + (1.0 - s_pair) * mean_rate
    np.fill_diagonal(rates, 0.0)
    return rates


def _vocabularies(cfg: SyntheticOrgConfig, families: list[str]):
    own = {f: [f"{f}_w{k:03d}" for k in range(cfg.vocab_per_family)] for f in families}
    n_borrow = int(round(cfg.topic_overlap * cfg.vocab_per_family))
    vocab = {}
    for k, f in enumerate(families):
        nxt = families[(k + 1) % len(families)]
        vocab[f] = own[f][: cfg.vocab_per_family - n_borrow] + own[nxt][:n_borrow]
    background = [f"bg_w{k:03d}" for k in range(cfg.background_vocab)]
    return vocab, background


def generate_synthetic_org(cfg: SyntheticOrgConfig) -> SyntheticOrg:
    rng = np.random.default_rng(cfg.rng_seed)
    families = cfg.family_names()
    roles = cfg.role_names()
    fam, role = _assign_cells(cfg, rng)
    width = len(str(cfg.n_employees - 1))
    ids = [f"e{k:0{width}d}" for k in range(cfg.n_employees)]
    roster = OrgRoster(tuple(
        Employee(ids[k], families[fam[k]], roles[role[k]], f"L{min(role[k], 2) + 1}")
        for k in range(cfg.n_employees)
    ))

    rates = pair_rates(cfg, fam, role)
    iu, ju = np.triu_indices(cfg.n_employees, k=1)
    counts = rng.poisson(rates[iu, ju])
    vocab, background = _vocabularies(cfg, families)
    # a family's vocabulary: one slice per role, the remainder common to the family
    slice_len = max(1, cfg.vocab_per_family // (cfg.n_roles_per_family + 1))
    ti = np.asarray(cfg.text_informativeness)
    lo, hi = cfg.subject_length

    records = []
    t0 = 1_700_000_000
    horizon = 180 * 24 * 3600
    for p in np.flatnonzero(counts):
        a, b = int(iu[p]), int(ju[p])
        for _ in range(int(counts[p])):
            s, r = (a, b) if rng.random() < 0.5 else (b, a)
            length = int(rng.integers(lo, hi + 1))
            if rng.random() < ti[fam[s]]:
                fv = vocab[families[fam[s]]]
                own = fv[role[s] * slice_len:(role[s] + 1) * slice_len]
                common = fv[cfg.n_roles_per_family * slice_len:] or fv
                use_role = rng.random(length) < cfg.role_text_share
                picks = rng.integers(0, 1 << 30, size=length)
                tokens = tuple(own[k % len(own)] if r else common[k % len(common)]
                               for k, r in zip(picks, use_role))
            else:
                tokens = tuple(background[i] for i in rng.integers(0, len(background), size=length))
            ts = t0 + int(rng.integers(0, horizon))
            records.append(EmailRecord(ids[s], ids[r], ts, tokens))
    records.sort(key=lambda r: (r.timestamp, r.sender, r.recipient, r.subject_tokens))
    return SyntheticOrg(roster, records, vocab, background, rates)
