"""Typed access to sspc trace.csv files.

The expected header is
    k,t,x_0..x_{nx-1},u_0..u_{nu-1},residual,cost,max_violation,subopt_err,ell,step_wall_s
with every cell numeric; subopt_err and step_wall_s may be empty (parsed as
NaN). Any deviation aborts with the offending column named.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd


class SchemaError(ValueError):
    """trace.csv does not match the documented schema."""


TAIL_COLUMNS = ["residual", "cost", "max_violation", "subopt_err", "ell",
                "step_wall_s"]
OPTIONAL_COLUMNS = {"subopt_err", "step_wall_s"}


@dataclass(frozen=True)
class TraceFrame:
    """One parsed closed-loop trace."""

    source: str
    t: np.ndarray
    states: np.ndarray   # (records, n_x)
    inputs: np.ndarray   # (records, n_u)
    residual: np.ndarray
    cost: np.ndarray
    max_violation: np.ndarray
    subopt_err: np.ndarray
    ell: int

    @property
    def n_x(self) -> int:
        return self.states.shape[1]

    @property
    def n_u(self) -> int:
        return self.inputs.shape[1]

    def label(self) -> str:
        return f"ell={self.ell}"


def _indexed_block(columns: list[str], prefix: str, start: int) -> int:
    """Number of contiguous `<prefix>_<i>` columns starting at `start`."""
    count = 0
    while start + count < len(columns):
        name = columns[start + count]
        if name != f"{prefix}_{count}":
            break
        count += 1
    return count


def load_trace(path) -> TraceFrame:
    path = Path(path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    cols = list(df.columns)
    if cols[:2] != ["k", "t"]:
        raise SchemaError(f"{path}: expected leading columns 'k,t', got {cols[:2]}")
    n_x = _indexed_block(cols, "x", 2)
    if n_x == 0:
        raise SchemaError(f"{path}: no state columns found (expected 'x_0' at "
                          f"position 2, got '{cols[2]}')")
    n_u = _indexed_block(cols, "u", 2 + n_x)
    if n_u == 0:
        raise SchemaError(f"{path}: no input columns found after the state "
                          f"block (got '{cols[2 + n_x]}')")
    tail = cols[2 + n_x + n_u:]
    if tail != TAIL_COLUMNS:
        bad = next((c for c, e in zip(tail, TAIL_COLUMNS) if c != e),
                   tail[-1] if tail else "<missing>")
        raise SchemaError(f"{path}: trailing columns {tail} do not match "
                          f"{TAIL_COLUMNS} (first offender: '{bad}')")
    if len(df) == 0:
        raise SchemaError(f"{path}: trace has no data rows")

    def parse(col: str) -> np.ndarray:
        raw = df[col].to_numpy()
        optional = col in OPTIONAL_COLUMNS
        out = np.empty(len(raw))
        for i, cell in enumerate(raw):
            if cell == "":
                if not optional:
                    raise SchemaError(
                        f"{path}: empty cell in required column '{col}' "
                        f"(row {i})")
                out[i] = np.nan
                continue
            try:
                out[i] = float(cell)
            except ValueError:
                raise SchemaError(
                    f"{path}: non-numeric cell '{cell}' in column '{col}' "
                    f"(row {i})") from None
        return out

    t = parse("t")
    states = np.column_stack([parse(f"x_{i}") for i in range(n_x)])
    inputs = np.column_stack([parse(f"u_{i}") for i in range(n_u)])
    ell_vals = parse("ell")
    return TraceFrame(
        source=str(path), t=t, states=states, inputs=inputs,
        residual=parse("residual"), cost=parse("cost"),
        max_violation=parse("max_violation"), subopt_err=parse("subopt_err"),
        ell=int(ell_vals[0]),
    )


def load_metrics(path) -> pd.DataFrame:
    path = Path(path)
    df = pd.read_csv(path)
    expected = ["ell", "steps_to_residual_1e10", "max_violation",
                "closed_loop_cost_sum"]
    if list(df.columns) != expected:
        raise SchemaError(f"{path}: metrics columns {list(df.columns)} do not "
                          f"match {expected}")
    return df
