"""Serializable certificate container shared by the local and global constructions.

A certificate is an :class:`EvalProgram` over x with roots ``phi`` (l+1 ids,
phi_0 first), ``psi`` (m ids) and optionally ``weights`` (normalized
partition functions), plus JSON metadata describing the problem it was built
for, the offset f_star, the validity domain and the square-root factors of
every phi_i.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .expr import deserialize, evaluate_many, serialize


@dataclass(frozen=True)
class Certificate:
    program: object

    @property
    def meta(self):
        return self.program.meta or {}

    @property
    def kind(self):
        return self.meta.get("kind")

    @property
    def f_star(self):
        return float(self.meta.get("f_star", 0.0))

    @property
    def phi(self):
        return list(self.program.roots["phi"])

    @property
    def psi(self):
        return list(self.program.roots.get("psi", []))

    @property
    def weights(self):
        return list(self.program.roots.get("weights", []))

    @property
    def sos_factors(self):
        """i -> list of root ids whose squares sum to phi_i."""
        return {int(k): list(v) for k, v in self.meta.get("sos", {}).items()}

    @property
    def dimension(self):
        return self.program.dimension

    def evaluate(self, X):
        """(phi (l+1, N), psi (m, N)) at the rows of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        roots = self.phi + self.psi
        V = evaluate_many(self.program, roots, X)
        return V[: len(self.phi)], V[len(self.phi):]

    def evaluate_weights(self, X):
        if not self.weights:
            return np.zeros((0, np.atleast_2d(X).shape[0]))
        return evaluate_many(self.program, self.weights, np.atleast_2d(np.asarray(X, dtype=float)))

    def to_bytes(self):
        return serialize(self.program)

    @classmethod
    def from_bytes(cls, data):
        program = deserialize(data)
        if not isinstance(program.roots, dict) or "phi" not in program.roots:
            raise FormatError("certificate IR has no phi roots")
        if not isinstance(program.meta, dict) or "kind" not in program.meta:
            raise FormatError("certificate IR has no certificate metadata")
        return cls(program)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise FormatError(f"cannot read certificate: {exc}") from None
        return cls.from_bytes(data)
