"""Trace Audit Service - Check finished runs against protocol invariants."""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List

from ..channel import CcaDecision, ChannelTrace, TransmissionRecord
from ..const import AP_ADDRESS, MODE_LBT
from ..energy import EnergyDfaModel, EnergyLogEntry, replay_oracle
from ..exceptions import InvariantViolation
from ..mac import MacParams
from ..warehouse import RunResult, RunStats

_LOGGER = logging.getLogger(__name__)


@dataclass
class AuditReport:
    """Counts of everything an audit verified."""

    transmissions: int
    cca_decisions: int
    collided: int
    energy_nodes: int

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)


def check_lbt_safety(trace: ChannelTrace, params: MacParams) -> int:
    """Verify every listen-before-talk transmission was preceded by a clear window.

    A decision without sensed activity must have listened exactly ``t_F``;
    otherwise exactly ``t_F + t_PS``. No foreign record may overlap the
    window unless its onset was still hidden by the carrier-sense delay
    when the window closed.

    Returns:
        int: Number of decisions checked

    Raises:
        InvariantViolation: On the first unsafe transmission
    """
    starts = {
        (record.sender, record.start)
        for record in trace.records
        if not record.is_jam
    }
    decided = set()
    for decision in trace.cca:
        expected = params.t_f_us
        if decision.sensed_activity:
            expected += decision.t_ps_us
        if decision.window_us != expected:
            raise InvariantViolation(
                f"Node {decision.node} at t={decision.time_us} listened "
                f"{decision.window_us} us, expected {expected} us",
                decision,
            )
        if (decision.node, decision.time_us) not in starts:
            raise InvariantViolation(
                f"Node {decision.node} cleared the channel at t={decision.time_us} "
                "but did not transmit",
                decision,
            )
        _check_window_clear(decision, trace.records, params.carrier_sense_delay_us)
        decided.add((decision.node, decision.time_us))

    missing = sorted(starts - decided)
    if missing:
        node, start = missing[0]
        raise InvariantViolation(
            f"Node {node} transmitted at t={start} without a clear channel assessment",
            missing[0],
        )
    return len(trace.cca)


def _check_window_clear(
    decision: CcaDecision, records: Iterable[TransmissionRecord], sense_delay_us: int
) -> None:
    window_start = decision.time_us - decision.window_us
    for record in records:
        if record.sender == decision.node:
            continue
        sensed_at = record.start + sense_delay_us
        if sensed_at < decision.time_us and record.end > window_start:
            raise InvariantViolation(
                f"Node {decision.node} transmitted at t={decision.time_us} although "
                f"node {record.sender} occupied [{record.start}, {record.end})",
                decision,
            )


def check_collisions(trace: ChannelTrace) -> int:
    """Verify overlaps destroy every involved frame and nothing else.

    Returns:
        int: Number of collided records

    Raises:
        InvariantViolation: On an asymmetric or spurious collision flag
    """
    records = sorted(trace.records, key=lambda record: (record.start, record.end))
    overlapped = [False] * len(records)
    for index, record in enumerate(records):
        for other_index in range(index + 1, len(records)):
            other = records[other_index]
            if other.start >= record.end:
                break
            overlapped[index] = overlapped[other_index] = True
    collided = 0
    for record, overlap in zip(records, overlapped):
        if record.collided != overlap:
            raise InvariantViolation(
                f"Record of node {record.sender} at t={record.start} has collided="
                f"{record.collided} but overlap={overlap}",
                record,
            )
        if record.collided:
            collided += 1
            if record.receivers:
                raise InvariantViolation(
                    f"Collided record of node {record.sender} at t={record.start} "
                    f"was received by {record.receivers}",
                    record,
                )
    return collided


def check_energy(
    energy_log: List[EnergyLogEntry], model: EnergyDfaModel, stats: RunStats
) -> int:
    """Replay every ledger and compare with the frozen statistics.

    Returns:
        int: Number of nodes verified

    Raises:
        InvariantViolation: On any mismatch, exact integer comparison
    """
    replayed = replay_oracle(energy_log, model)
    for address, node in stats.nodes.items():
        value = replayed.get(address, 0)
        if value != node.energy_pj:
            raise InvariantViolation(
                f"Node {address}: replay {value} pJ != frozen {node.energy_pj} pJ",
                address,
            )
    return len([address for address in replayed if address != AP_ADDRESS])


class TraceAuditService:
    """Service for auditing finished runs."""

    def audit(self, result: RunResult) -> AuditReport:
        """
        Run every check on a run result.

        Args:
            result: Finished run

        Returns:
            AuditReport with the number of checked items

        Raises:
            InvariantViolation: If any check fails
        """
        cca = 0
        if result.config.mac.mode == MODE_LBT:
            cca = check_lbt_safety(result.trace, result.config.mac)
        collided = check_collisions(result.trace)
        nodes = check_energy(result.energy_log, result.energy_model, result.stats)
        report = AuditReport(
            transmissions=len(result.trace.records),
            cca_decisions=cca,
            collided=collided,
            energy_nodes=nodes,
        )
        _LOGGER.debug(f"Audit of run {result.stats.run_id} passed: {report.to_dict()}")
        return report
