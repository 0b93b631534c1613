"""Versioned checkpoint archive: named parameter arrays plus JSON metadata.

Format (documented byte-exactly in the README): a NumPy ``.npz`` zip whose
entries are

  json:meta                   0-d unicode array holding a JSON object
  json:rng                    0-d unicode array, numpy Generator state (optional)
  param:<name>                float64 parameter arrays
  opt:<name>:exp_avg          Adam first-moment arrays (optional)
  opt:<name>:exp_avg_sq       Adam second-moment arrays (optional)

``meta`` carries: format tag, iteration, adam_step, seed, config_hash, dims,
partition, embed_dim, share_across_layers, trained_iterations.
Parameter names follow ``<part>.<stack>.<block>.<field>`` as produced by
``mapper.named_parameters``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .core import ConfigError, DTYPE, LatentPartition
from .mapper import BlockParams, HairMapperParams, ModulationParams, named_parameters

FORMAT_TAG = "hairedit-checkpoint-v1"

_MOD_FIELDS = ("gamma_w1", "gamma_b1", "gamma_w2", "gamma_b2", "beta_w1", "beta_b1", "beta_w2", "beta_b2")


@dataclass
class CheckpointData:
    params: HairMapperParams
    meta: dict
    adam_moments: dict[str, tuple[np.ndarray, np.ndarray]] | None
    rng_state: dict | None


def save_checkpoint(
    path: str | Path,
    params: HairMapperParams,
    meta: dict,
    adam_moments: dict[str, tuple[np.ndarray, np.ndarray]] | None = None,
    rng_state: dict | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    full_meta = {
        "format": FORMAT_TAG,
        "partition": [params.partition.n_coarse, params.partition.n_medium, params.partition.n_fine],
        "embed_dim": params.embed_dim,
        "trained_iterations": params.trained_iterations,
        "init_seed": params.seed,
        **meta,
    }
    arrays: dict[str, np.ndarray] = {"json:meta": np.array(json.dumps(full_meta))}
    for name, tensor in named_parameters(params):
        arrays[f"param:{name}"] = tensor.detach().numpy()
    if adam_moments is not None:
        for name, (m, v) in adam_moments.items():
            arrays[f"opt:{name}:exp_avg"] = m
            arrays[f"opt:{name}:exp_avg_sq"] = v
    if rng_state is not None:
        arrays["json:rng"] = np.array(json.dumps(rng_state))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def _group_params(raw: dict[str, np.ndarray]) -> dict[str, dict[int, dict[int, dict[str, torch.Tensor]]]]:
    grouped: dict[str, dict[int, dict[int, dict[str, torch.Tensor]]]] = {}
    for key, arr in raw.items():
        part, stack, block, *rest = key.split(".")
        field = ".".join(rest)
        t = torch.from_numpy(np.ascontiguousarray(arr)).to(DTYPE)
        t.requires_grad_(True)
        grouped.setdefault(part, {}).setdefault(int(stack), {}).setdefault(int(block), {})[field] = t
    return grouped


def load_checkpoint(path: str | Path) -> CheckpointData:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as archive:
        entries = {k: archive[k] for k in archive.files}
    if "json:meta" not in entries:
        raise ConfigError(f"{path} is not a {FORMAT_TAG} archive")
    meta = json.loads(str(entries["json:meta"]))
    if meta.get("format") != FORMAT_TAG:
        raise ConfigError(f"unsupported checkpoint format {meta.get('format')!r}")

    raw_params = {k[len("param:") :]: v for k, v in entries.items() if k.startswith("param:")}
    grouped = _group_params(raw_params)
    parts = {}
    for part in ("coarse", "medium", "fine"):
        if part not in grouped:
            raise ConfigError(f"checkpoint missing parameters for the {part} sub-mapper")
        stacks = []
        for s in sorted(grouped[part]):
            blocks = []
            for b in sorted(grouped[part][s]):
                f = grouped[part][s][b]
                blocks.append(
                    BlockParams(
                        weight=f["fc.weight"],
                        bias=f["fc.bias"],
                        modulation=ModulationParams(**{n: f[f"mod.{n}"] for n in _MOD_FIELDS}),
                    )
                )
            stacks.append(tuple(blocks))
        parts[part] = tuple(stacks)

    partition = LatentPartition(*meta["partition"])
    params = HairMapperParams(
        coarse=parts["coarse"],
        medium=parts["medium"],
        fine=parts["fine"],
        partition=partition,
        embed_dim=int(meta["embed_dim"]),
        seed=int(meta.get("init_seed", 0)),
        trained_iterations=int(meta.get("trained_iterations", 0)),
    )

    moments: dict[str, tuple[np.ndarray, np.ndarray]] | None = None
    opt_keys = [k for k in entries if k.startswith("opt:")]
    if opt_keys:
        moments = {}
        for key in opt_keys:
            if key.endswith(":exp_avg"):
                name = key[len("opt:") : -len(":exp_avg")]
                moments[name] = (entries[key], entries[f"opt:{name}:exp_avg_sq"])
    rng_state = json.loads(str(entries["json:rng"])) if "json:rng" in entries else None
    return CheckpointData(params=params, meta=meta, adam_moments=moments, rng_state=rng_state)


def checkpoint_file_hash(path: str | Path) -> str:
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return digest[:16]
