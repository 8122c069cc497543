"""Scenario driver: configuration, end-to-end runs, suites, benchmarks.

Configuration files are INI with one ``[scenario]`` section::

    [scenario]
    seed = 7
    devices = 2
    nodes = 2
    policies = model-x AND (region-eu OR beta)
    attributes = model-x, region-eu
    incentive = 10
    deadline = 5
    adversary = honest

``policies`` holds one formula for every device or one per device separated
by ``;``.  ``attributes`` is the contract's signing set W.

Everything random comes from ``random.Random(seed)``, so a report's
deterministic part (everything except ``timings``) is byte-identical across
runs with the same config.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import random
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

from .access_policy import AccessStructure, AttributeSet, Gate, Leaf, evaluate_policy, parse_policy, policy_to_lsss
from .daps import daps_extract, daps_kgen, daps_sign, daps_verify
from .errors import ConfigError, LedgerError, PolicyError, ProtocolError
from .ledger_sim import Ledger
from .oabs import DeviceSigningKey, OabsSignature, PublicParams, oabs_keygen, oabs_setup, oabs_sign, oabs_sign_out, oabs_verify
from .pairing_algebra import Q
from .payload_crypto import decrypt, encrypt, ledger_keygen, ledger_sign, ledger_verify
from .protocol_actors import (
    ADVERSARIES,
    DeliveryResult,
    Gateway,
    TransmissionNode,
    Trace,
    Vendor,
    run_delivery,
    update_id,
)

PAID_DELIVERED = "paid+delivered"
REFUNDED_UNDELIVERED = "refunded+undelivered"
PARTIAL = "partial"
VIOLATION = "violation"


# -- configuration --------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    vendors: int = 1
    nodes: int = 1
    gateways: int = 1
    devices: int = 1
    n: int = 16
    l: int = 256
    policies: tuple[str, ...] = ("model-x AND (region-eu OR beta)",)
    attributes: tuple[str, ...] = ("model-x", "region-eu")
    incentive: int = 10
    deadline: int = 5
    funds: int | None = None
    vendor_balance: int = 1000
    adversary: str = "honest"
    payload_size: int = 4096

    def policy_for(self, i: int) -> str:
        return self.policies[0] if len(self.policies) == 1 else self.policies[i]

    @property
    def expected(self) -> str:
        return PAID_DELIVERED if self.adversary == "honest" else REFUNDED_UNDELIVERED

    def validate(self) -> ScenarioConfig:
        for name in ("nodes", "gateways", "devices"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be at least 1")
        if self.vendors != 1:
            raise ConfigError("vendors", "exactly one vendor is supported")
        if self.nodes < self.devices:
            raise ConfigError("nodes", "each delivery needs its own node key, so nodes >= devices")
        if self.n < 3:
            raise ConfigError("n", "must be at least 3")
        if self.l < 1:
            raise ConfigError("l", "must be at least 1")
        if not self.attributes:
            raise ConfigError("attributes", "the contract needs a non-empty attribute set")
        if len(set(self.attributes)) + 2 > self.n:
            raise ConfigError("attributes", f"|W| = {len(set(self.attributes))} exceeds n - 2 = {self.n - 2}")
        if len(self.policies) not in (1, self.devices):
            raise ConfigError("policies", "give one policy or one per device")
        for i in range(self.devices):
            try:
                tree = parse_policy(self.policy_for(i))
            except PolicyError as exc:
                raise ConfigError("policies", str(exc)) from None
            if not evaluate_policy(tree, self.attributes):
                raise ConfigError("attributes", f"W does not satisfy the policy of device {i}")
        if self.incentive < 1:
            raise ConfigError("incentive", "must be positive")
        if self.deadline < 1:
            raise ConfigError("deadline", "must be at least 1")
        if self.funds is not None and self.funds < self.devices * self.incentive:
            raise ConfigError("funds", "must cover devices * incentive")
        if self.vendor_balance < (self.funds or self.devices * self.incentive):
            raise ConfigError("vendor_balance", "cannot cover the contract funds")
        if self.adversary not in ADVERSARIES:
            raise ConfigError("adversary", f"choose one of {', '.join(ADVERSARIES)}")
        if self.payload_size < 0:
            raise ConfigError("payload_size", "must be non-negative")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_INT_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig)
               if f.type in ("int", "int | None")}


def _coerce(key: str, raw: str):
    if key in _INT_FIELDS:
        if key == "funds" and raw.strip().lower() in ("", "none"):
            return None
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(key, f"expected an integer, got {raw!r}") from None
    if key == "policies":
        return tuple(p.strip() for p in raw.split(";") if p.strip())
    if key == "attributes":
        return tuple(a.strip() for a in raw.split(",") if a.strip())
    return raw.strip()


def load_config(path: str | Path | None = None, **overrides) -> ScenarioConfig:
    """Read an INI file (optional) and apply non-None keyword overrides."""
    values: dict = {}
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    if path is not None:
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise ConfigError("config", f"cannot read {path}")
        if "scenario" not in cp:
            raise ConfigError("config", "missing [scenario] section")
        for key, raw in cp["scenario"].items():
            if key not in known:
                raise ConfigError(key, "unknown setting")
            values[key] = _coerce(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig(**values).validate()


# -- reports ------------------------------------------------------------------------

@dataclass
class RunReport:
    config: dict
    outcome: str
    expected: str
    deliveries: list[dict]
    balances: dict[str, int]
    firmware: dict[str, str | None]
    contract: dict
    refund: int
    payouts: int
    conserved: bool
    state_digest: str
    event_log: str
    trace: list[dict]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def matches(self) -> bool:
        return self.outcome == self.expected

    def deterministic(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("timings")
        d["event_log_sha256"] = hashlib.sha256(self.event_log.encode()).hexdigest()
        d.pop("event_log")
        return d

    def to_json(self, include_timings: bool = False) -> str:
        d = self.deterministic()
        if include_timings:
            d["timings"] = self.timings
        return json.dumps(d, sort_keys=True, indent=2)

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json() + "\n")
        (out / "timings.json").write_text(json.dumps(self.timings, sort_keys=True) + "\n")
        (out / "events.jsonl").write_text(self.event_log)
        (out / "trace.jsonl").write_text("".join(json.dumps(e, sort_keys=True) + "\n" for e in self.trace))


def classify(results: list[DeliveryResult], refund: int, funds: int, withdrew: bool) -> str:
    """Fairness verdict for one run.

    A delivery is atomic when the node was paid exactly if the device decrypted.
    Any non-atomic delivery, or a refund that differs from the unpaid residue,
    is a violation.
    """
    payouts = sum(r.paid for r in results)
    if any((r.paid > 0) != r.delivered for r in results):
        return VIOLATION
    if not withdrew or refund != funds - payouts:
        return VIOLATION
    if all(r.delivered for r in results):
        return PAID_DELIVERED
    if not any(r.delivered for r in results):
        return REFUNDED_UNDELIVERED
    return PARTIAL


class Scenario:
    """One configured run; keeps every actor around for inspection after :meth:`run`."""

    def __init__(self, config: ScenarioConfig):
        self.config = config.validate()
        self.rng = random.Random(config.seed)
        self.timings: dict[str, float] = {}
        self.trace = Trace()
        self.results: list[DeliveryResult] = []

    def setup(self) -> None:
        cfg, rng = self.config, self.rng
        t0 = time.perf_counter()
        self.vendor = Vendor.setup("vendor", cfg.n, cfg.l, rng)
        self.nodes = [TransmissionNode.create(f"node{i}", rng) for i in range(cfg.nodes)]
        self.gateways = [Gateway.create(f"gateway{i}", rng) for i in range(cfg.gateways)]
        self.devices = [self.vendor.provision(f"device{i}", cfg.policy_for(i), rng)
                        for i in range(cfg.devices)]
        self.timings["setup_keygen_s"] = time.perf_counter() - t0

        for i, dev in enumerate(self.devices):
            gw = self.gateways[i % len(self.gateways)]
            gw.register_device(dev)
            self.trace.add("register-device", dev.device_id, gw.name)
        if cfg.adversary != "unregistered-node":
            for node in self.nodes:
                node.register(self.vendor)
                self.trace.add("register", node.name, self.vendor.name)

        self.funds = cfg.funds if cfg.funds is not None else cfg.devices * cfg.incentive
        self.ledger = Ledger.genesis({self.vendor.PK: cfg.vendor_balance})
        self.binary = rng.randbytes(cfg.payload_size)
        W = AttributeSet.from_labels(cfg.attributes, capacity=cfg.n)
        self.contract_id = self.vendor.publish(self.ledger, self.binary, cfg.deadline, cfg.devices,
                                               W, cfg.incentive, self.funds, rng)
        self.d_id = update_id(self.binary)
        self.trace.add("publish", self.vendor.name, "ledger", contract=self.contract_id)

    def deliver(self) -> None:
        cfg, rng = self.config, self.rng
        t0 = time.perf_counter()
        order = list(range(cfg.devices))
        rng.shuffle(order)
        for i in order:
            self.ledger.advance_epoch()
            gw = self.gateways[i % len(self.gateways)]
            try:
                res = run_delivery(self.ledger, self.vendor, self.nodes[i], gw, self.devices[i],
                                   self.contract_id, self.d_id, self.trace, rng, cfg.adversary)
            except ProtocolError as exc:
                res = DeliveryResult(self.devices[i].device_id, self.nodes[i].name, aborted=exc.reason)
                self.trace.add("abort", self.nodes[i].name, gw.name, reason=exc.reason)
            self.results.append(res)
        self.timings["deliveries_s"] = time.perf_counter() - t0

    def settle(self) -> None:
        """Past the deadline the vendor recovers whatever is left."""
        ledger = self.ledger
        ledger.advance_epoch(max(0, self.config.deadline + 1 - ledger.height))
        try:
            self.refund = self.vendor.withdraw(ledger, self.contract_id, self.rng)
            self.withdrew = True
            self.trace.add("withdraw", self.vendor.name, "ledger", amount=self.refund)
        except LedgerError as exc:
            self.refund, self.withdrew = 0, False
            self.trace.add("withdraw", self.vendor.name, "ledger", status="rejected", reason=exc.reason)

    def report(self) -> RunReport:
        ledger = self.ledger
        balances = {self.vendor.name: ledger.balance(self.vendor.PK)}
        balances.update({nd.name: ledger.balance(nd.PK) for nd in self.nodes})
        balances.update({gw.name: ledger.balance(gw.keypair.PK) for gw in self.gateways})
        return RunReport(
            config=self.config.to_dict(),
            outcome=classify(self.results, self.refund, self.funds, self.withdrew),
            expected=self.config.expected,
            deliveries=[dataclasses.asdict(r) for r in self.results],
            balances=balances,
            firmware={d.device_id: d.firmware.hex() if d.firmware else None for d in self.devices},
            contract=ledger.contract(self.contract_id).summary(),
            refund=self.refund,
            payouts=sum(r.paid for r in self.results),
            conserved=ledger.conserved(),
            state_digest=ledger.state_digest(),
            event_log=ledger.event_lines(),
            trace=self.trace.entries,
            timings=self.timings,
        )

    def run(self) -> RunReport:
        self.setup()
        self.deliver()
        self.settle()
        return self.report()


def run_scenario(config: ScenarioConfig) -> RunReport:
    return Scenario(config).run()


def run_suite(seeds: range | list[int], base: ScenarioConfig | None = None) -> list[RunReport]:
    """Every adversary against every seed."""
    base = base or ScenarioConfig()
    return [run_scenario(dataclasses.replace(base, seed=s, adversary=adv))
            for adv in ADVERSARIES for s in seeds]


# -- random honest scenarios ----------------------------------------------------------

def _random_tree(rng: random.Random, labels: list[str], leaves: int):
    if leaves == 1:
        return Leaf(rng.choice(labels))
    k = rng.randint(2, min(3, leaves))
    cuts = sorted(rng.sample(range(1, leaves), k - 1))
    sizes = [b - a for a, b in zip([0] + cuts, cuts + [leaves])]
    return Gate(rng.choice(("and", "or")), tuple(_random_tree(rng, labels, s) for s in sizes))


def policy_text(tree) -> str:
    if isinstance(tree, Leaf):
        return tree.label
    sep = " AND " if tree.op == "and" else " OR "
    return "(" + sep.join(policy_text(c) for c in tree.children) + ")"


def random_policy(rng: random.Random, universe: list[str], max_rows: int, W: set[str]) -> str:
    """A formula with at most ``max_rows`` leaves that ``W`` satisfies."""
    while True:
        tree = _random_tree(rng, universe, rng.randint(1, max_rows))
        if evaluate_policy(tree, W):
            return policy_text(tree)


def random_honest_config(seed: int, max_rows: int = 8, max_payload: int = 64 * 1024,
                         max_devices: int = 2) -> ScenarioConfig:
    rng = random.Random(seed)
    universe = [f"attr{i}" for i in range(10)]
    W = sorted(rng.sample(universe, rng.randint(1, 6)))
    devices = rng.randint(1, max_devices)
    policies = tuple(random_policy(rng, universe, max_rows, set(W)) for _ in range(devices))
    return ScenarioConfig(seed=seed, devices=devices, nodes=devices, gateways=rng.randint(1, devices),
                          policies=policies, attributes=tuple(W),
                          incentive=rng.randint(1, 20), payload_size=rng.randint(0, max_payload)).validate()


# -- benchmarks -------------------------------------------------------------------------

# Reference timings measured on a different library, curve and CPU;
# printed for comparison, never asserted.
REFERENCE_MS = {
    "oabs-sign |W|=50": 155.0,
    "daps-setup": 7.0, "daps-kgen": 13.0, "daps-sign": 15.0, "daps-verify": 31.0, "daps-extract": 61.0,
    "ledger-setup": 6.0, "ledger-kgen": 2.0, "ledger-sign": 4.0, "ledger-verify": 10.0,
    "elgamal-setup": 6.0, "elgamal-kgen": 2.0, "elgamal-enc": 11.0, "elgamal-dec": 3.0,
}


WARMUP = 12  # exceeds FixedBase's build threshold


def _time(fn, iterations: int) -> float:
    samples = []
    for _ in range(iterations):
        t = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t)
    return statistics.mean(samples) * 1000


def bench_sign(counts=(10, 20, 50), iterations: int = 30, seed: int = 0, n: int | None = None,
               extras: bool = True) -> list[dict]:
    """Mean device-side sign time per |W|, plus the other primitives' rows.

    Each row: {"name", "mean_ms", "reference_ms"}.
    """
    counts = list(counts)
    if not counts or min(counts) < 2:
        raise ConfigError("counts", "the bench key needs at least two attributes per signature")
    n = n or max(counts) + 2
    if max(counts) + 2 > n:
        raise ConfigError("n", "attribute counts must be at most n - 2")
    rng = random.Random(seed)
    params, msk = oabs_setup(n, 256, rng)
    _, dk = oabs_keygen(params, msk, policy_to_lsss("a0 AND a1"), rng)
    rows = []
    for k in counts:
        W = AttributeSet.from_labels([f"a{i}" for i in range(k)], capacity=n)
        partial = oabs_sign_out(params, dk.outsourcing, W, rng)
        msg = rng.randbytes(48)
        for _ in range(WARMUP):  # lazy fixed-base tables build on first uses
            oabs_sign(params, msg, dk, partial, rng)
        ms = _time(lambda: oabs_sign(params, msg, dk, partial, rng), iterations)
        name = f"oabs-sign |W|={k}"
        rows.append({"name": name, "mean_ms": ms, "reference_ms": REFERENCE_MS.get(name)})
    if not extras:
        return rows

    kp = daps_kgen(rng=rng)
    addr, p1, p2 = b"bench-address", b"payload-1", b"payload-2"
    s1, s2 = daps_sign(kp.sk, addr, p1), daps_sign(kp.sk, addr, p2)
    lk = ledger_keygen(rng)
    lsig = ledger_sign(lk.SK, p1, rng)
    blob = rng.randbytes(1 << 20)
    ct = encrypt(kp.pk, blob, rng)
    extra = {
        "daps-kgen": lambda: daps_kgen(rng=rng),
        "daps-sign": lambda: daps_sign(kp.sk, addr, p1),
        "daps-verify": lambda: daps_verify(kp.pk, addr, p1, s1),
        "daps-extract": lambda: daps_extract(kp.pk, addr, (p1, s1), (p2, s2)),
        "ledger-kgen": lambda: ledger_keygen(rng),
        "ledger-sign": lambda: ledger_sign(lk.SK, p1, rng),
        "ledger-verify": lambda: ledger_verify(lk.PK, p1, lsig),
        "elgamal-enc": lambda: encrypt(kp.pk, blob, rng),
        "elgamal-dec": lambda: decrypt(kp.sk, ct),
    }
    for name, fn in extra.items():
        rows.append({"name": name, "mean_ms": _time(fn, iterations), "reference_ms": REFERENCE_MS.get(name)})
    return rows


def format_bench(rows: list[dict]) -> str:
    lines = [f"{'operation':<22}{'mean ms':>10}{'reference ms':>14}"]
    for r in rows:
        ref = f"{r['reference_ms']:.1f}" if r["reference_ms"] is not None else "-"
        lines.append(f"{r['name']:<22}{r['mean_ms']:>10.3f}{ref:>14}")
    return "\n".join(lines)


# -- key material vectors ---------------------------------------------------------------

def keygen_demo(policy: str, seed: int = 0, n: int = 8, l: int = 32) -> dict:
    """Canonical serializations for a small instance, plus one signature over it.

    ``verify_vectors`` re-checks a dict produced here from bytes alone.
    """
    A = policy_to_lsss(policy)
    rng = random.Random(seed)
    params, msk = oabs_setup(n, l, rng)
    ok, dk = oabs_keygen(params, msk, A, rng)
    W = AttributeSet.from_labels(sorted(set(A.labels)), capacity=n)
    message = b"keygen-demo"
    sig = oabs_sign(params, message, dk, oabs_sign_out(params, ok, W, rng), rng)
    return {
        "policy": policy,
        "matrix": [[x if x < (1 << 128) else x - Q for x in row] for row in A.matrix],
        "rho": list(A.labels),
        "access_structure": A.to_bytes().hex(),
        "params": params.to_bytes().hex(),
        "outsourcing_key": ok.to_bytes().hex(),
        "signing_key": dk.to_bytes().hex(),
        "attribute_set": W.to_bytes().hex(),
        "message": message.hex(),
        "signature": sig.to_bytes().hex(),
    }


def verify_vectors(vectors: dict) -> bool:
    params = PublicParams.from_bytes(bytes.fromhex(vectors["params"]))
    A = AccessStructure.from_bytes(bytes.fromhex(vectors["access_structure"]))
    dk = DeviceSigningKey.from_bytes(bytes.fromhex(vectors["signing_key"]))
    sig = OabsSignature.from_bytes(bytes.fromhex(vectors["signature"]))
    return (dk.outsourcing.policy == A
            and sig.W == AttributeSet.from_bytes(bytes.fromhex(vectors["attribute_set"]))
            and oabs_verify(params, bytes.fromhex(vectors["message"]), sig))
