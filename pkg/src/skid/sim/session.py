"""Discrete-event driver for multi-robot mapping sessions.

Each tick a robot takes one keyframe, floods descriptor backlog to peers in
radio range, polls its inbox twice, answers scan requests, registers scan
payloads into loop measurements, and batches verified loops into a local
pose-graph solve. All randomness flows through named streams of the session
seed and robots are visited in sorted name order, so a run is a pure
function of its config. Wall-clock timings are collected separately and are
exempt from that guarantee.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from skid.errors import ConfigError, RegistrationError, SkidError
from skid.geometry.io import (
    list_scan_files,
    load_scan,
    load_trajectory,
    save_scan,
    save_trajectory,
)
from skid.geometry.se3 import PoseSE3
from skid.loop_verify import (
    DEFAULT_MIN_INLIERS,
    DEFAULT_TAU_ACCEPT,
    DEFAULT_TAU_MSE,
    DriftModel,
    LoopMeasurement,
    consistent_subset,
    geometric_gate,
    pcm_consistency,
    select_consistent,
    truncated_fitness,
)
from skid.place_recognition import (
    DEFAULT_EXCLUSION_GAP,
    DescriptorDb,
    KeyframeId,
)
from skid.pose_graph.distributed import (
    DistributedOptions,
    build_distributed_graph,
    chain_factors,
    loop_to_factor,
)
from skid.pose_graph.factors import BetweenFactor
from skid.pose_graph.optimize import OptimizeConfig, optimize
from skid.registration.pipeline import RegistrationConfig, register
from skid.sim import wire
from skid.sim.network import MessagePool, NetworkModel
from skid.sim.odometry import OdomNoiseModel, perturb_odometry
from skid.sim.seeds import named_rng
from skid.sim.sensor import SensorModel, render_scan
from skid.sim.trajectories import generate_trajectories
from skid.sim.world import generate_world
from skid.solid import SolidParams, compute_solid


@dataclass
class SessionConfig:
    world_kind: str = "crater-field"
    extent: float = 120.0
    n_features: int = 140
    n_robots: int = 2
    pattern: str = "crossing"
    length: float = 200.0
    keyframe_spacing: float = 1.0
    seed: int = 0
    tick_seconds: float = 1.0
    drain_ticks: int = 15
    sensor: SensorModel = field(default_factory=SensorModel)
    odom_noise: OdomNoiseModel = field(
        default_factory=lambda: OdomNoiseModel(sigma_t=0.02, sigma_yaw=math.radians(0.2))
    )
    network: NetworkModel = field(default_factory=NetworkModel)
    solid: SolidParams = field(default_factory=SolidParams)
    registration: RegistrationConfig = field(default_factory=RegistrationConfig)
    tau_dist: float = 100.0
    exclusion_gap: int = DEFAULT_EXCLUSION_GAP
    tau_mse: float = DEFAULT_TAU_MSE
    tau_accept: float = DEFAULT_TAU_ACCEPT
    min_inliers: int = DEFAULT_MIN_INLIERS
    fitness_denominator: str = "inliers"
    # tighter than the library default: sessions weight each cycle check by
    # the drift of its odometry chains, so a slack threshold is not needed
    # to keep distant true loops together
    tau_pcm: float = 3.0
    optimize_batch: int = 4
    candidate_cooldown: int = 1
    request_timeout: int = 12
    max_request_retries: int = 2
    pose_reexchange: bool = True
    settlement_rounds: int = 2
    # how a solve models the peer trajectory: "chain" compresses the peer's
    # reports into an odometry-weighted relative chain anchored once near
    # its gauge; "prior" pins every reported copy with a weak prior
    neighbor_model: str = "chain"
    export_scans: bool = False
    loop_gt_radius: float = 5.0

    def odom_information(self) -> np.ndarray:
        """Information of one odometry step; sigmas floored so zero-noise
        sessions still yield a finite matrix."""
        st = max(self.odom_noise.sigma_t, 1e-3)
        sr = max(self.odom_noise.sigma_yaw, 1e-3)
        return np.diag([1.0 / st**2] * 3 + [1.0 / sr**2] * 3)


@dataclass
class RobotData:
    """Per-robot session inputs: sensor-frame scans (float32 quantized, so a
    file round trip reproduces them bit-exactly), dead-reckoned poses, and
    ground truth when available."""

    scans: list
    odom: list
    gt: list | None = None

    def __post_init__(self):
        if len(self.odom) != len(self.scans):
            raise ValueError("odometry and scan counts differ")
        if self.gt is not None and len(self.gt) != len(self.scans):
            raise ValueError("ground truth and scan counts differ")


def simulate_inputs(cfg: SessionConfig) -> dict[str, RobotData]:
    """World, trajectories, rendered scans, and corrupted odometry."""
    world = generate_world(cfg.world_kind, cfg.seed, cfg.extent, cfg.n_features)
    gt = generate_trajectories(
        cfg.n_robots, cfg.pattern, cfg.length, cfg.keyframe_spacing, cfg.seed
    )
    data: dict[str, RobotData] = {}
    for name in sorted(gt):
        poses = gt[name]
        scans = [
            render_scan(world, p, cfg.sensor, named_rng(cfg.seed, "scan", name, k)).astype(
                np.float32
            )
            for k, p in enumerate(poses)
        ]
        odom = perturb_odometry(poses, cfg.odom_noise, named_rng(cfg.seed, "odom", name))
        data[name] = RobotData(scans=scans, odom=odom, gt=poses)
    return data


def _pair_key(a: KeyframeId, b: KeyframeId):
    ka, kb = (a.robot, a.index), (b.robot, b.index)
    return (ka, kb) if ka <= kb else (kb, ka)


@dataclass
class _PairStatus:
    own: KeyframeId
    remote: KeyframeId
    distance: float
    status: str = "pending"  # pending -> requested -> done
    requested_at: int = -1
    retries: int = 0


class _Robot:
    def __init__(self, name: str, data: RobotData, cfg: SessionConfig):
        self.name = name
        self.data = data
        self.db = DescriptorDb(cfg.solid)
        self.kids: list[KeyframeId] = []
        self.descriptors: list = []
        self.est: list[PoseSE3] = []
        self.seen_desc: set[tuple[str, int]] = set()
        self.remote_scans: dict[tuple[str, int], np.ndarray] = {}
        self.neighbor_est: dict[str, dict[int, PoseSE3]] = {}
        self.neighbor_odom: dict[str, list[PoseSE3]] = {}
        self.hwm: dict[str, int] = {}
        self.odom_hwm: dict[str, int] = {}
        self.report_queue: list[bytes] = []  # own gate-passed loop reports
        self.report_hwm: dict[str, int] = {}
        self.seen_reports: set = set()  # pair keys of foreign reports taken
        self.query_queue: list = []  # (KeyframeId, SolidDescriptor)
        self.pairs: dict = {}  # pair key -> _PairStatus
        self.awaiting: dict[tuple[str, int], list] = {}  # remote -> pair keys
        self.last_request_tick = -(10**9)
        self.loops: list[LoopMeasurement] = []
        self.active: list[LoopMeasurement] = []  # current consistent subset
        self.unverified = 0  # gate-passed loops since the last clique round
        self.failed_rows: list = []
        self.candidate_rows: list = []
        self.solves = 0

    def n_keyframes(self) -> int:
        return len(self.kids)

    def position_at(self, tick: int) -> np.ndarray:
        poses = self.data.gt if self.data.gt is not None else self.data.odom
        return poses[min(tick, len(poses) - 1)].translation

    def scan_f64(self, index: int) -> np.ndarray:
        return self.data.scans[index].astype(np.float64)


@dataclass
class SessionReport:
    config: SessionConfig
    robots: dict  # name -> {"gt": ..., "odom": ..., "est": ...}
    loops: dict  # name -> list[LoopMeasurement]
    frames: dict  # (a, b) -> PoseSE3 taking b-frame poses into a's frame
    stats: dict
    message_log: list
    candidate_rows: list
    loop_rows: list
    timings: dict


class Session:
    """Runs the tick loop over pre-built inputs; see module docstring."""

    def __init__(self, data: dict[str, RobotData], cfg: SessionConfig):
        self.cfg = cfg
        self.pool = MessagePool(cfg.network)
        self.robots = {name: _Robot(name, data[name], cfg) for name in sorted(data)}
        for r in self.robots.values():
            for peer in self.robots:
                if peer != r.name:
                    r.hwm[peer] = 0
                    r.odom_hwm[peer] = 0
                    r.report_hwm[peer] = 0
                    r.neighbor_est[peer] = {}
                    r.neighbor_odom[peer] = []
        self._pmax: dict = {}  # loop pair key -> largest PCM score observed
        self._drift = DriftModel(
            cfg.odom_noise.sigma_t, cfg.odom_noise.sigma_yaw, cfg.keyframe_spacing
        )
        self.timings = {"descriptor_s": 0.0, "registration_s": 0.0, "optimize_s": 0.0}

    # -- tick phases ---------------------------------------------------

    def run(self) -> SessionReport:
        t_run = time.perf_counter()
        cfg = self.cfg
        names = sorted(self.robots)
        n_kf = max(len(self.robots[n].data.scans) for n in names)
        total = n_kf + cfg.drain_ticks
        for tick in range(total):
            t0 = tick * cfg.tick_seconds
            if tick < n_kf:
                for n in names:
                    if tick < len(self.robots[n].data.scans):
                        self._make_keyframe(self.robots[n], tick, t0)
                for n in names:
                    self._sync_descriptors(self.robots[n], tick, t0)
            for n in names:
                self._drain_inbox(self.robots[n], tick, t0 + 0.45 * cfg.tick_seconds)
            for n in names:
                self._run_queries(self.robots[n], tick, t0)
            for n in names:
                self._drain_inbox(self.robots[n], tick, t0 + 0.9 * cfg.tick_seconds)
            for n in names:
                self._retry_requests(self.robots[n], tick, t0)
            last = tick == total - 1
            for n in names:
                self._maybe_solve(self.robots[n], tick, t0, force=last)
        self._finalize_loops()
        self._settle(total - 1, total * cfg.tick_seconds)
        self.timings["total_s"] = time.perf_counter() - t_run
        return self._report()

    def _finalize_loops(self) -> None:
        """Advance pool states to their final accepted/rejected decision.

        During the run loops stay geometric_ok so the clique can be re-cut
        as candidates arrive; the last cut is the one the report shows.
        Loops whose peer endpoint estimate never arrived stay geometric_ok:
        there is nothing to cycle-check them against."""
        for name in sorted(self.robots):
            r = self.robots[name]
            known, odom_map = self._known_pool(r)
            if not known:
                r.active = []
                continue
            self._record_pmax(known, odom_map)
            r.active = select_consistent(
                known, odom_map, tau_pcm=self.cfg.tau_pcm, drift=self._drift
            )

    def _settle(self, tick: int, t0: float) -> None:
        """End-of-run exchange-and-resolve rounds.

        A robot's last solve used whatever endpoint estimates the peer had
        reported by then, which may predate the peer's own last solve. A
        couple of re-exchange rounds let both sides converge onto mutually
        consistent maps before the session reports."""
        cfg = self.cfg
        names = sorted(self.robots)
        for rnd in range(cfg.settlement_rounds):
            now = t0 + rnd * cfg.tick_seconds
            for n in names:
                r = self.robots[n]
                accepted = r.active
                if not accepted:
                    continue
                t = time.perf_counter()
                self._solve(r, accepted)
                self.timings["optimize_s"] += time.perf_counter() - t
                r.solves += 1
                if not cfg.pose_reexchange:
                    continue
                sent = set()
                for loop in accepted:
                    own = loop.from_id if loop.from_id.robot == r.name else loop.to_id
                    other = loop.to_id if loop.from_id.robot == r.name else loop.from_id
                    if other.robot == r.name or other.robot not in self.robots:
                        continue
                    if own.index in sent:
                        continue
                    sent.add(own.index)
                    peer = self.robots[other.robot]
                    if self._in_range(r, peer, tick):
                        payload = wire.pack_pose_update(own, r.est[own.index])
                        self._publish(r, peer, "pose_update", payload, now, tick)
            for n in names:
                self._drain_inbox(self.robots[n], tick, now + 0.9 * cfg.tick_seconds)

    def _make_keyframe(self, r: _Robot, tick: int, t0: float) -> None:
        t = time.perf_counter()
        kid = KeyframeId(r.name, tick, t0)
        desc = compute_solid(r.scan_f64(tick), self.cfg.solid)
        r.db.insert(kid, desc)
        r.kids.append(kid)
        r.descriptors.append(desc)
        r.query_queue.append((kid, desc))
        if tick == 0:
            r.est.append(r.data.odom[0])
        else:
            inc = r.data.odom[tick - 1].inverse().compose(r.data.odom[tick])
            r.est.append(r.est[-1].compose(inc))
        self.timings["descriptor_s"] += time.perf_counter() - t

    def _in_range(self, a: _Robot, b: _Robot, tick: int) -> bool:
        d = float(np.linalg.norm(a.position_at(tick) - b.position_at(tick)))
        return d <= self.cfg.network.range_limit

    def _publish(self, sender: _Robot, receiver: _Robot, kind, payload, when, tick):
        self.pool.publish(
            sender.name,
            receiver.name,
            kind,
            payload,
            when,
            sender.position_at(tick),
            receiver.position_at(tick),
        )

    def _sync_descriptors(self, r: _Robot, tick: int, t0: float) -> None:
        """Flood not-yet-sent own descriptors, dead-reckoned poses, and loop
        reports to peers currently in range.

        High-water marks per peer make this a backlog sync: a robot that
        walks into range late receives the full history. Odometry rides
        along because peers cycle-check and weight loops through each
        other's chains; one batched message per tick keeps it cheap."""
        for peer_name in sorted(r.hwm):
            peer = self.robots[peer_name]
            if not self._in_range(r, peer, tick):
                continue
            while r.hwm[peer_name] < r.n_keyframes():
                i = r.hwm[peer_name]
                payload = wire.pack_descriptor_msg(r.kids[i], r.descriptors[i])
                self._publish(r, peer, "descriptor", payload, t0, tick)
                r.hwm[peer_name] += 1
            lo = r.odom_hwm[peer_name]
            if lo < r.n_keyframes():
                batch = [r.data.odom[i] for i in range(lo, r.n_keyframes())]
                payload = wire.pack_odom_sync(r.name, lo, batch)
                self._publish(r, peer, "odom_sync", payload, t0, tick)
                r.odom_hwm[peer_name] = r.n_keyframes()
            while r.report_hwm[peer_name] < len(r.report_queue):
                payload = r.report_queue[r.report_hwm[peer_name]]
                self._publish(r, peer, "loop_report", payload, t0, tick)
                r.report_hwm[peer_name] += 1

    def _drain_inbox(self, r: _Robot, tick: int, now: float) -> None:
        for env in self.pool.poll(r.name, now):
            if env.kind == "descriptor":
                kid, desc = wire.unpack_descriptor_msg(env.payload)
                key = (kid.robot, kid.index)
                if kid.robot == r.name or key in r.seen_desc:
                    continue
                r.seen_desc.add(key)
                r.db.insert(kid, desc)
                r.query_queue.append((kid, desc))
            elif env.kind == "scan_request":
                kid = wire.unpack_scan_request(env.payload)
                if kid.robot != r.name or kid.index >= len(r.data.scans):
                    continue
                payload = wire.pack_scan_payload(
                    kid, r.est[kid.index], r.data.scans[kid.index]
                )
                self._publish(r, self.robots[env.sender], "scan_payload", payload, now, tick)
            elif env.kind == "scan_payload":
                kid, pose_est, pts = wire.unpack_scan_payload(env.payload)
                key = (kid.robot, kid.index)
                r.remote_scans[key] = pts
                if kid.robot in r.neighbor_est:
                    r.neighbor_est[kid.robot][kid.index] = pose_est
                for pkey in r.awaiting.pop(key, []):
                    st = r.pairs[pkey]
                    if st.status == "requested":
                        self._evaluate_pair(r, st, pts, tick, now)
            elif env.kind == "odom_sync":
                robot, start, poses = wire.unpack_odom_sync(env.payload)
                chain = r.neighbor_odom.get(robot)
                if robot == r.name or chain is None:
                    continue
                # batches are cumulative per sender; extend only past what we
                # hold so a retransmitted overlap cannot corrupt the chain
                if start <= len(chain):
                    chain.extend(poses[len(chain) - start :])
            elif env.kind == "loop_report":
                self._take_loop_report(r, env.payload)
            elif env.kind == "pose_update":
                kid, pose = wire.unpack_pose_update(env.payload)
                if kid.robot in r.neighbor_est:
                    r.neighbor_est[kid.robot][kid.index] = pose

    def _take_loop_report(self, r: _Robot, payload: bytes) -> None:
        """Adopt a peer's gate-passed loop.

        Loops between this robot and the sender close out the local candidate
        pair so the work is not redone; loops the sender closed on its own
        trajectory (or with a third robot) enter the pool directly, since the
        joint solve wants every peer constraint it can check."""
        from_id, to_id, pose, fitness, inliers, sender_est = wire.unpack_loop_report(payload)
        sender_kid = from_id if from_id.robot != r.name else to_id
        if sender_kid.robot in r.neighbor_est:
            r.neighbor_est[sender_kid.robot][sender_kid.index] = sender_est
        pkey = _pair_key(from_id, to_id)
        if pkey in r.seen_reports:
            return
        r.seen_reports.add(pkey)
        if r.name in (from_id.robot, to_id.robot):
            st = r.pairs.get(pkey)
            if st is not None and st.status == "done":
                return
            own = to_id if from_id.robot != r.name else from_id
            remote = from_id if from_id.robot != r.name else to_id
            r.pairs[pkey] = _PairStatus(own, remote, float("nan"), status="done")
        loop = LoopMeasurement(
            from_id=from_id,
            to_id=to_id,
            relative_pose=pose,
            fitness=fitness,
            inlier_count=inliers,
            state="proposed",
        )
        loop.advance_state("geometric_ok")
        r.loops.append(loop)
        r.unverified += 1

    def _run_queries(self, r: _Robot, tick: int, t0: float) -> None:
        cfg = self.cfg
        queue, r.query_queue = r.query_queue, []
        for kid, desc in queue:
            cands = r.db.query(
                kid,
                desc,
                tau_dist=cfg.tau_dist,
                exclusion_gap=cfg.exclusion_gap,
                max_candidates=1,
            )
            for cand in cands:
                own, remote = None, None
                for side_a, side_b in ((cand.query, cand.match), (cand.match, cand.query)):
                    if side_a.robot == r.name:
                        own, remote = side_a, side_b
                        break
                if own is None:
                    continue  # match between two other robots; not ours to close
                pkey = _pair_key(cand.query, cand.match)
                if pkey in r.pairs:
                    continue
                r.pairs[pkey] = _PairStatus(own, remote, cand.descriptor_distance)
                gt_d = self._gt_distance(cand.query, cand.match)
                r.candidate_rows.append(
                    (
                        f"{cand.query.robot}/{cand.query.index}",
                        f"{cand.match.robot}/{cand.match.index}",
                        cand.descriptor_distance,
                        gt_d,
                    )
                )
        self._advance_pairs(r, tick, t0)

    def _gt_distance(self, a: KeyframeId, b: KeyframeId) -> float:
        ra, rb = self.robots.get(a.robot), self.robots.get(b.robot)
        if ra is None or rb is None or ra.data.gt is None or rb.data.gt is None:
            return float("nan")
        return float(
            np.linalg.norm(
                ra.data.gt[a.index].translation - rb.data.gt[b.index].translation
            )
        )

    def _advance_pairs(self, r: _Robot, tick: int, t0: float) -> None:
        """Move pending candidate pairs forward: register local ones, request
        remote scans under the cooldown, reuse cached payloads."""
        cfg = self.cfg
        # best-first: strong candidates grab the request slots, so a burst of
        # weak far-field matches cannot starve a genuine revisit
        pending = [(pk, r.pairs[pk]) for pk in r.pairs if r.pairs[pk].status == "pending"]
        pending.sort(key=lambda it: (math.isnan(it[1].distance), it[1].distance, it[0]))
        for pkey, st in pending:
            if st.remote.robot == r.name:
                self._evaluate_pair(r, st, r.data.scans[st.remote.index], tick, t0)
                continue
            cached = r.remote_scans.get((st.remote.robot, st.remote.index))
            if cached is not None:
                self._evaluate_pair(r, st, cached, tick, t0)
                continue
            if tick - r.last_request_tick < cfg.candidate_cooldown:
                continue
            peer = self.robots[st.remote.robot]
            if not self._in_range(r, peer, tick):
                continue
            self._publish(r, peer, "scan_request", wire.pack_scan_request(st.remote), t0, tick)
            st.status = "requested"
            st.requested_at = tick
            r.last_request_tick = tick
            r.awaiting.setdefault((st.remote.robot, st.remote.index), []).append(pkey)

    def _retry_requests(self, r: _Robot, tick: int, t0: float) -> None:
        cfg = self.cfg
        for pkey in sorted(r.pairs):
            st = r.pairs[pkey]
            if st.status != "requested" or tick - st.requested_at <= cfg.request_timeout:
                continue
            if st.retries >= cfg.max_request_retries:
                continue
            peer = self.robots[st.remote.robot]
            if not self._in_range(r, peer, tick):
                continue
            self._publish(r, peer, "scan_request", wire.pack_scan_request(st.remote), t0, tick)
            st.requested_at = tick
            st.retries += 1

    def _evaluate_pair(self, r: _Robot, st: _PairStatus, remote_pts, tick: int, now: float):
        """Register remote scan against own, gate on truncated fitness, and
        queue gate-passed loops for broadcast to peers."""
        cfg = self.cfg
        st.status = "done"
        src = np.asarray(remote_pts, dtype=np.float64)
        dst = r.scan_f64(st.own.index)
        t = time.perf_counter()
        try:
            result = register(src, dst, cfg.registration)
        except RegistrationError as exc:
            self.timings["registration_s"] += time.perf_counter() - t
            r.failed_rows.append((st.own, st.remote, st.distance, str(exc.stage)))
            return
        aligned = src @ result.pose.rotation.T + result.pose.translation
        score, n_in = truncated_fitness(
            dst, aligned, tau_mse=cfg.tau_mse, denominator=cfg.fitness_denominator
        )
        self.timings["registration_s"] += time.perf_counter() - t
        loop = LoopMeasurement(from_id=st.own, to_id=st.remote, relative_pose=result.pose)
        geometric_gate(
            loop, score, n_in, tau_accept=cfg.tau_accept, min_inliers=cfg.min_inliers
        )
        r.loops.append(loop)
        if loop.state == "geometric_ok":
            r.unverified += 1
            r.seen_reports.add(_pair_key(st.own, st.remote))
            r.report_queue.append(
                wire.pack_loop_report(
                    st.own,
                    st.remote,
                    result.pose,
                    loop.fitness,
                    loop.inlier_count,
                    r.est[st.own.index],
                )
            )

    # -- verification and solving ---------------------------------------

    def _known_pool(self, r: _Robot) -> tuple[list[LoopMeasurement], dict]:
        """Gate-passed loops whose endpoint odometry this robot holds, plus
        the odometry map the cycle checks run through: own dead reckoning and
        the peers' synced dead reckoning, so the chain-drift weights see real
        random-walk chains on both sides of every cycle."""
        odom_map: dict = {r.name: r.data.odom}
        for peer, chain in r.neighbor_odom.items():
            odom_map[peer] = chain
        def covered(kid: KeyframeId) -> bool:
            return kid.index < len(odom_map.get(kid.robot, ()))
        known = [
            l
            for l in r.loops
            if l.state in ("geometric_ok", "accepted")
            and covered(l.from_id)
            and covered(l.to_id)
        ]
        return known, odom_map

    def _maybe_solve(self, r: _Robot, tick: int, t0: float, force: bool) -> None:
        """Re-run the consistency clique over the whole loop pool and solve.

        Selection is repeated from scratch each round rather than per batch: a
        batch made entirely of mutually consistent false matches would
        otherwise elect itself, with nothing ever revisiting the decision.
        Loop states stay geometric_ok until the final selection so the
        clique can change its mind while evidence accumulates.
        """
        cfg = self.cfg
        if r.unverified == 0 or (r.unverified < cfg.optimize_batch and not force):
            return
        known, odom_map = self._known_pool(r)
        if not known:
            return
        r.unverified = 0
        idx = consistent_subset(known, odom_map, tau_pcm=cfg.tau_pcm, drift=self._drift)
        r.active = [known[i] for i in idx]
        if not r.active:
            return
        t = time.perf_counter()
        self._solve(r, r.active)
        self.timings["optimize_s"] += time.perf_counter() - t
        r.solves += 1
        if cfg.pose_reexchange:
            sent = set()
            for loop in r.active:
                own = loop.from_id if loop.from_id.robot == r.name else loop.to_id
                other = loop.to_id if loop.from_id.robot == r.name else loop.from_id
                if other.robot == r.name or other.robot not in self.robots:
                    continue
                if own.index in sent:
                    continue
                sent.add(own.index)
                peer = self.robots[other.robot]
                if self._in_range(r, peer, tick):
                    payload = wire.pack_pose_update(own, r.est[own.index])
                    self._publish(r, peer, "pose_update", payload, t0 + 0.95 * cfg.tick_seconds, tick)

    def _record_pmax(self, loops: list[LoopMeasurement], odom_map: dict) -> None:
        """Log the largest pairwise PCM score each loop saw; diagnostics only."""

        def endpoints_on(loop: LoopMeasurement, robot: str):
            if loop.from_id.robot == robot:
                return loop.from_id, loop.to_id
            return loop.to_id, loop.from_id

        groups: dict = {}
        for loop in loops:
            groups.setdefault(loop.robot_pair(), []).append(loop)
        for pair, members in groups.items():
            first = pair[0]
            for i, la in enumerate(members):
                for lb in members[i + 1 :]:
                    fa, ta = endpoints_on(la, first)
                    fb, tb = endpoints_on(lb, first)
                    try:
                        odom_a = odom_map[fa.robot][fa.index].inverse().compose(
                            odom_map[fb.robot][fb.index]
                        )
                        odom_b = odom_map[tb.robot][tb.index].inverse().compose(
                            odom_map[ta.robot][ta.index]
                        )
                        p = pcm_consistency(la, lb, odom_a, odom_b)
                    except (KeyError, IndexError, SkidError):
                        continue
                    for loop in (la, lb):
                        k = _pair_key(loop.from_id, loop.to_id)
                        if p > self._pmax.get(k, float("-inf")):
                            self._pmax[k] = p

    def _solve(self, r: _Robot, accepted: list[LoopMeasurement]) -> None:
        cfg = self.cfg
        info = cfg.odom_information()
        own_factors = []
        for i in range(r.n_keyframes() - 1):
            z = r.data.odom[i].inverse().compose(r.data.odom[i + 1])
            own_factors.append(
                BetweenFactor(
                    from_id=r.kids[i],
                    to_id=r.kids[i + 1],
                    measurement=z,
                    information=info,
                    kind="odom",
                )
            )
        inter = []
        for loop in accepted:
            if loop.from_id.robot == loop.to_id.robot:
                own_factors.append(loop_to_factor(loop))
            else:
                inter.append(loop)
        if cfg.neighbor_model == "chain":
            peers = {
                (l.to_id if l.from_id.robot == r.name else l.from_id).robot for l in inter
            }
            neighbor_factors = []
            for peer in sorted(peers):
                neighbor_factors.extend(chain_factors(peer, r.neighbor_est[peer], info))
            options = DistributedOptions(neighbor_prior=False, include_neighbor_odometry=True)
        else:
            neighbor_factors = None
            options = DistributedOptions()
        nodes, factors = build_distributed_graph(
            r.name,
            r.est,
            own_factors,
            inter,
            r.neighbor_est,
            info,
            options=options,
            neighbor_factors=neighbor_factors,
        )
        optimize(nodes, factors, OptimizeConfig(max_iter=30))
        for node in nodes:
            if node.id.robot == r.name:
                r.est[node.id.index] = node.estimate

    # -- outputs ---------------------------------------------------------

    def _frames(self) -> dict:
        """Per robot pair, the transform taking the peer's reported frame
        into this robot's frame, fit over accepted inter-loop endpoints."""
        out: dict = {}
        for name in sorted(self.robots):
            r = self.robots[name]
            by_peer: dict = {}
            for loop in r.loops:
                if loop.state != "accepted":
                    continue
                own = loop.from_id if loop.from_id.robot == r.name else loop.to_id
                remote = loop.to_id if loop.from_id.robot == r.name else loop.from_id
                if remote.robot == r.name:
                    continue
                reported = r.neighbor_est.get(remote.robot, {}).get(remote.index)
                if reported is None:
                    continue
                if loop.from_id.robot == r.name:
                    implied = r.est[own.index].compose(loop.relative_pose)
                else:
                    implied = r.est[own.index].compose(loop.relative_pose.inverse())
                by_peer.setdefault(remote.robot, []).append((implied, reported))
            for peer, pairs in sorted(by_peer.items()):
                # each loop gives a full frame estimate; average them
                # (chordal mean rotation) so collinear anchors stay stable
                frames = [imp.compose(rep.inverse()) for imp, rep in pairs]
                t_mean = np.mean([f.translation for f in frames], axis=0)
                r_sum = np.sum([f.rotation for f in frames], axis=0)
                u, _, vt = np.linalg.svd(r_sum)
                rot = u @ np.diag([1.0, 1.0, np.sign(np.linalg.det(u @ vt))]) @ vt
                out[(name, peer)] = PoseSE3(rot, t_mean)
        return out

    def _report(self) -> SessionReport:
        robots = {}
        loops = {}
        loop_rows = []
        candidate_rows = []
        stats: dict = {
            "published": self.pool.stats.published,
            "delivered": self.pool.stats.delivered,
            "dropped": self.pool.stats.dropped,
        }
        for kind, nbytes in sorted(self.pool.stats.bytes_by_kind.items()):
            stats[f"bytes_{kind}"] = nbytes
        for name in sorted(self.robots):
            r = self.robots[name]
            robots[name] = {"gt": r.data.gt, "odom": r.data.odom, "est": r.est}
            loops[name] = list(r.loops)
            stats[f"keyframes_{name}"] = r.n_keyframes()
            stats[f"solves_{name}"] = r.solves
            candidate_rows.extend(r.candidate_rows)
            for loop in r.loops:
                pkey = _pair_key(loop.from_id, loop.to_id)
                loop_rows.append(
                    (
                        f"{loop.from_id.robot}/{loop.from_id.index}",
                        f"{loop.to_id.robot}/{loop.to_id.index}",
                        r.pairs[pkey].distance if pkey in r.pairs else float("nan"),
                        loop.fitness,
                        loop.inlier_count,
                        self._pmax.get(pkey, float("nan")),
                        loop.state,
                    )
                )
            for own, remote, d, stage in r.failed_rows:
                loop_rows.append(
                    (
                        f"{own.robot}/{own.index}",
                        f"{remote.robot}/{remote.index}",
                        d,
                        float("nan"),
                        0,
                        float("nan"),
                        f"failed:{stage}",
                    )
                )
        for state in ("geometric_ok", "accepted", "rejected"):
            stats[f"loops_{state}"] = sum(
                1 for ls in loops.values() for l in ls if l.state == state
            )
        return SessionReport(
            config=self.cfg,
            robots=robots,
            loops=loops,
            frames=self._frames(),
            stats=stats,
            message_log=list(self.pool.log),
            candidate_rows=candidate_rows,
            loop_rows=loop_rows,
            timings=dict(self.timings),
        )


# -- file output and replay ------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else format(v, ".9g")
    return str(v)


def write_report(report: SessionReport, out_dir) -> None:
    """Session artifacts as plain files.

    Trajectories (ground truth, dead reckoning, optimized) per robot, loop
    and candidate tables, the raw message log, aggregate counters, and the
    estimated inter-robot frame transforms. timings.txt holds wall-clock
    numbers and is the one file exempt from run-to-run determinism.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dt = report.config.tick_seconds
    for name in sorted(report.robots):
        traj = report.robots[name]
        ts = [k * dt for k in range(len(traj["odom"]))]
        if traj["gt"] is not None:
            save_trajectory(str(out / f"{name}_gt.txt"), traj["gt"], ts)
        save_trajectory(str(out / f"{name}_odom.txt"), traj["odom"], ts)
        save_trajectory(str(out / f"{name}_opt.txt"), traj["est"], ts)
    with open(out / "loops.csv", "w") as fh:
        fh.write("from,to,d,s,n_inliers,p_max,state\n")
        for row in report.loop_rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    with open(out / "candidates.csv", "w") as fh:
        fh.write("query,match,distance,gt_distance\n")
        for row in report.candidate_rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    with open(out / "messages.csv", "w") as fh:
        fh.write("msg_id,kind,bytes,sent_at,deliver_at,dropped\n")
        for row in report.message_log:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    with open(out / "stats.txt", "w") as fh:
        for key in sorted(report.stats):
            fh.write(f"{key}={report.stats[key]}\n")
    with open(out / "frames.txt", "w") as fh:
        for (a, b) in sorted(report.frames):
            pose = report.frames[(a, b)]
            t = pose.translation
            q = pose.quat_xyzw()
            vals = " ".join(format(x, ".9f") for x in (*t, *q))
            fh.write(f"{a} {b} {vals}\n")
    with open(out / "timings.txt", "w") as fh:
        for key in sorted(report.timings):
            fh.write(f"{key}={report.timings[key]:.3f}\n")


def export_scans(data: dict[str, RobotData], out_dir, tick_seconds: float = 1.0) -> None:
    """Write session inputs as a replayable dataset.

    Layout: <out>/<robot>/scans/000000.bin ..., <out>/<robot>/odometry.txt,
    and gt.txt when ground truth exists. Scans are float32 on the wire and
    in memory, so a reloaded run sees bit-identical points.
    """
    for name in sorted(data):
        rd = data[name]
        scan_dir = Path(out_dir) / name / "scans"
        scan_dir.mkdir(parents=True, exist_ok=True)
        for k, scan in enumerate(rd.scans):
            save_scan(str(scan_dir / f"{k:06d}.bin"), np.asarray(scan, dtype=np.float64))
        ts = [k * tick_seconds for k in range(len(rd.odom))]
        save_trajectory(str(Path(out_dir) / name / "odometry.txt"), rd.odom, ts)
        if rd.gt is not None:
            save_trajectory(str(Path(out_dir) / name / "gt.txt"), rd.gt, ts)


def load_dataset(root) -> dict[str, RobotData]:
    """Inverse of export_scans; robots are the subdirectories holding both
    a scans/ directory and an odometry.txt."""
    root = Path(root)
    if not root.is_dir():
        raise ConfigError(f"dataset root {root} is not a directory")
    data: dict[str, RobotData] = {}
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        scan_dir = sub / "scans"
        odom_file = sub / "odometry.txt"
        if not scan_dir.is_dir() or not odom_file.exists():
            continue
        scans = [
            load_scan(path).astype(np.float32) for path in list_scan_files(str(scan_dir))
        ]
        _, odom = load_trajectory(str(odom_file))
        gt = None
        if (sub / "gt.txt").exists():
            _, gt = load_trajectory(str(sub / "gt.txt"))
        n = min(len(scans), len(odom))
        data[sub.name] = RobotData(
            scans=scans[:n], odom=odom[:n], gt=gt[:n] if gt else None
        )
    if not data:
        raise ConfigError(f"no robot directories with scans/ and odometry.txt under {root}")
    return data


def run_session(cfg: SessionConfig, out_dir=None) -> SessionReport:
    """Simulate inputs, run the session, optionally write artifacts."""
    t0 = time.perf_counter()
    data = simulate_inputs(cfg)
    build_s = time.perf_counter() - t0
    report = Session(data, cfg).run()
    report.timings["world_s"] = build_s
    report.timings["total_s"] += build_s
    if out_dir is not None:
        write_report(report, out_dir)
        if cfg.export_scans:
            export_scans(data, Path(out_dir) / "dataset", cfg.tick_seconds)
    return report


def run_dataset(root, cfg: SessionConfig, out_dir=None) -> SessionReport:
    """Replay recorded scans and odometry through the same session loop."""
    report = Session(load_dataset(root), cfg).run()
    if out_dir is not None:
        write_report(report, out_dir)
    return report
