"""Prefix persistence: JSON documents, compressed HDF5 archives and DOT export."""
from dataclasses import asdict, dataclass, field
import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import h5py
import numpy as np

from net_format import emit_net, parse_net
from occurrence import Prefix
from petri_net import Goal

FORMAT_VERSION = 1


@dataclass
class PrefixDocument:
    """Self-contained prefix description, re-loadable for offline queries."""
    net: str
    conditions: List[dict]
    events: List[dict]
    initial: List[int]
    delta: List[dict] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @classmethod
    def from_prefix(cls, prefix: Prefix, stats: Optional[dict] = None,
                    goal: Optional[Goal] = None) -> 'PrefixDocument':
        net = prefix.net
        conditions = [{"id": c.id, "parent": c.parent, "place": c.place} for c in prefix.conditions]
        events = [{"id": e.id, "transition": e.transition, "preset": sorted(e.preset),
                   "postset": list(e.postset), "cutoff": e.cutoff} for e in prefix.events]
        delta = []
        for c in prefix.conditions:
            ignored = prefix.delta.get(c.key)
            if ignored:
                delta.append({"condition": c.id, "ignored": net.sorted_transitions(ignored)})
        return cls(net=emit_net(net, goal), conditions=conditions, events=events,
                   initial=sorted(prefix.initial_conditions), delta=delta,
                   stats=dict(stats or {}))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> 'PrefixDocument':
        data = json.loads(text)
        version = data.get("version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported prefix document version {version}")
        return cls(**data)

    def without(self, *sections: str) -> dict:
        """The document as a dict minus the named sections, for comparisons."""
        data = asdict(self)
        for name in sections:
            data.pop(name, None)
        return data

    def to_prefix(self) -> Prefix:
        """Rebuild the prefix by replaying the events in document order."""
        net, _ = parse_net(self.net)
        prefix = Prefix(net)
        if sorted(prefix.initial_conditions) != sorted(self.initial):
            raise ValueError("initial conditions do not match the net's initial marking")
        for entry in self.events:
            event = prefix.add_event(entry["transition"], entry["preset"], cutoff=entry["cutoff"])
            if event.id != entry["id"] or list(event.postset) != list(entry["postset"]):
                raise ValueError(f"event {entry['id']} is inconsistent with its preset")
        for entry in self.conditions:
            cond = prefix.conditions[entry["id"]]
            if cond.place != entry["place"] or cond.parent != entry["parent"]:
                raise ValueError(f"condition {entry['id']} is inconsistent with its parent")
        for entry in self.delta:
            prefix.delta[prefix.conditions[entry["condition"]].key] = frozenset(entry["ignored"])
        return prefix


def save_prefix_document(path: Union[str, Path], document: PrefixDocument) -> None:
    Path(path).write_text(document.to_json())


def load_prefix_document(path: Union[str, Path]) -> PrefixDocument:
    return PrefixDocument.from_json(Path(path).read_text())


def emit_dot(prefix: Prefix) -> str:
    """Conditions as circles, events as boxes, cut-offs dashed."""
    lines = ["digraph prefix {"]
    for c in prefix.conditions:
        lines.append(f'  c{c.id} [shape=circle, label="{c.place}"];')
    for e in prefix.events:
        style = ", style=dashed" if e.cutoff else ""
        lines.append(f'  e{e.id} [shape=box, label="{e.transition}"{style}];')
    for e in prefix.events:
        for c in sorted(e.preset):
            lines.append(f"  c{c} -> e{e.id};")
        for c in e.postset:
            lines.append(f"  e{e.id} -> c{c};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_prefix_hdf5(filename: Union[str, Path], prefix: Prefix,
                     stats: Optional[dict] = None, goal: Optional[Goal] = None) -> None:
    """
    Save the prefix to HDF5 with gzip-compressed index arrays.
    Presets and delta entries are stored in compressed sparse row layout.
    """
    net = prefix.net
    with h5py.File(filename, 'w') as f:
        f.attrs['version'] = FORMAT_VERSION
        f.attrs['net'] = emit_net(net, goal)
        for name, value in (stats or {}).items():
            f.attrs[f'stats.{name}'] = value

        cond_place = np.array([net.place_index[c.place] for c in prefix.conditions], dtype=np.int32)
        cond_parent = np.array([-1 if c.parent is None else c.parent for c in prefix.conditions],
                               dtype=np.int64)
        event_transition = np.array([net.transition_rank[e.transition] for e in prefix.events],
                                    dtype=np.int32)
        event_cutoff = np.array([e.cutoff for e in prefix.events], dtype=bool)
        preset_indptr, preset_indices = _csr([sorted(e.preset) for e in prefix.events])
        delta_indptr, delta_indices = _csr([
            sorted(net.transition_rank[t] for t in prefix.delta.get(c.key, ()))
            for c in prefix.conditions])

        for name, data in (('condition_place', cond_place), ('condition_parent', cond_parent),
                           ('event_transition', event_transition), ('event_cutoff', event_cutoff),
                           ('preset_indptr', preset_indptr), ('preset_indices', preset_indices),
                           ('delta_indptr', delta_indptr), ('delta_indices', delta_indices)):
            f.create_dataset(name, data=data, compression='gzip', compression_opts=9)


def _csr(rows: List[List[int]]) -> Tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows]) if rows else []
    indices = np.array([x for r in rows for x in r], dtype=np.int64)
    return indptr, indices


def load_prefix_hdf5(filename: Union[str, Path]) -> Tuple[Prefix, Dict[str, object]]:
    """Load a prefix saved by save_prefix_hdf5, with its stats."""
    with h5py.File(filename, 'r') as f:
        version = f.attrs.get('version')
        if version is None or int(version) != FORMAT_VERSION:
            raise ValueError(f"unsupported prefix archive version {version}")
        net, _ = parse_net(str(f.attrs['net']))
        stats = {}
        for key, value in f.attrs.items():
            if key.startswith('stats.'):
                stats[key[len('stats.'):]] = value.item() if isinstance(value, np.generic) else value
        event_transition = f['event_transition'][:]
        event_cutoff = f['event_cutoff'][:]
        preset_indptr = f['preset_indptr'][:]
        preset_indices = f['preset_indices'][:]
        delta_indptr = f['delta_indptr'][:]
        delta_indices = f['delta_indices'][:]
        cond_place = f['condition_place'][:]

    prefix = Prefix(net)
    for i, rank in enumerate(event_transition):
        preset = preset_indices[preset_indptr[i]:preset_indptr[i + 1]].tolist()
        prefix.add_event(net.transitions[int(rank)], preset, cutoff=bool(event_cutoff[i]))
    if len(prefix.conditions) != len(cond_place):
        raise ValueError("archive condition table does not match its events")
    for c in prefix.conditions:
        ranks = delta_indices[delta_indptr[c.id]:delta_indptr[c.id + 1]]
        if len(ranks):
            prefix.delta[c.key] = frozenset(net.transitions[int(r)] for r in ranks)
    return prefix, stats
