"""Channel specification documents: parse/serialize the channel descriptions
consumed by the CLI.

Two equivalent forms:

* inline strings, e.g. ``adder``, ``bec:p_erase=0.5``, ``noisy-adder:p=0.5``,
  ``su-sbc:p=0.4,w=identity``;
* YAML documents with the same keys, e.g.::

      type: su-sbc
      p: 0.4
      w: identity

  Explicit kernels use ``type: kernel`` with ``x1_size``, ``x2_size`` and
  ``rows`` (one list of output probabilities per (x1, x2) pair in row-major
  order).
"""

from __future__ import annotations

import numpy as np

from .channels import (
    MacKernel,
    SbcParams,
    adder_mac,
    bec,
    builder_by_name,
    identity_mac,
    noisy_adder_mac,
    special_bemac,
    su_sbc,
)


class ChannelSpecError(ValueError):
    pass


def _parse_kv(body: str) -> dict:
    out = {}
    if not body:
        return out
    for item in body.split(","):
        if "=" not in item:
            raise ChannelSpecError(f"expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def parse_channel(spec: str):
    """Parse an inline channel spec into a MacKernel or SbcParams."""
    name, _, body = spec.partition(":")
    name = name.strip()
    kv = _parse_kv(body)
    try:
        if name == "adder":
            return adder_mac()
        if name == "identity":
            return identity_mac()
        if name == "special-bemac":
            return special_bemac()
        if name == "bec":
            return bec(float(kv.get("p_erase", kv.get("p", 0.5))))
        if name == "noisy-adder":
            return noisy_adder_mac(float(kv["p"]))
        if name == "su-sbc":
            w = builder_by_name(kv.get("w", "identity"))
            return su_sbc(float(kv["p"]), w, delta=float(kv.get("delta", 0.0)))
    except (KeyError, ValueError) as exc:
        raise ChannelSpecError(f"bad channel spec {spec!r}: {exc}") from exc
    raise ChannelSpecError(f"unknown channel type {name!r}")


def channel_from_document(doc: dict):
    """Build a channel from a parsed YAML document."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise ChannelSpecError("channel document needs a 'type' key")
    known = {"type", "p", "p_erase", "w", "delta", "x1_size", "x2_size", "rows"}
    unknown = set(doc) - known
    if unknown:
        raise ChannelSpecError(f"unknown channel keys: {sorted(unknown)}")
    ctype = doc["type"]
    if ctype == "kernel":
        try:
            x1, x2 = int(doc["x1_size"]), int(doc["x2_size"])
            rows = np.asarray(doc["rows"], dtype=float)
        except (KeyError, TypeError) as exc:
            raise ChannelSpecError(f"bad kernel document: {exc}") from exc
        if rows.ndim != 2 or rows.shape[0] != x1 * x2:
            raise ChannelSpecError("rows must be one row per (x1, x2) pair, row-major")
        return MacKernel(rows.reshape(x1, x2, -1))
    parts = [ctype]
    body = ",".join(
        f"{k}={doc[k]}" for k in ("p", "p_erase", "w", "delta") if k in doc
    )
    return parse_channel(parts[0] + (":" + body if body else ""))


def channel_to_document(channel) -> dict:
    """Serialize a channel back to its document form."""
    if isinstance(channel, SbcParams):
        return {
            "type": "su-sbc",
            "p": channel.p,
            "w": channel.w.name or "kernel",
            "delta": channel.delta,
            "w_rows": [[float(v) for v in row] for row in channel.w.w.reshape(-1, channel.w.y_size)],
        }
    return {
        "type": channel.name or "kernel",
        "x1_size": channel.x1_size,
        "x2_size": channel.x2_size,
        "rows": [[float(v) for v in row] for row in channel.w.reshape(-1, channel.y_size)],
    }
