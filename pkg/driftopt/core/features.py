from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from driftopt.core.exceptions import InputError


class ActionSpace(BaseModel):
    """Finite action set [K]."""

    model_config = ConfigDict(frozen=True)

    n_actions: int = Field(..., ge=2, description="Number of actions K")


class FeatureMode(str, Enum):
    TABULAR = "tabular"
    DENSE = "dense"


class FeatureMap(BaseModel):
    """Joint context-action feature map f(x, a).

    ``tabular`` contexts are integer ids in ``[0, n_contexts)`` and f(x, a) is the
    one-hot indicator of the pair (x, a); a context-free problem is the special
    case ``n_contexts=1``. ``dense`` contexts are real vectors of length
    ``context_dim`` and f(x, a) places x in the block of action a, so that
    d = K * context_dim.
    """

    model_config = ConfigDict(frozen=True)

    mode: FeatureMode = Field(FeatureMode.TABULAR, description="Feature construction mode")
    n_actions: int = Field(..., ge=2, description="Number of actions K")
    n_contexts: int = Field(1, ge=1, description="Number of context ids (tabular mode)")
    context_dim: int = Field(1, ge=1, description="Context vector length (dense mode)")

    @model_validator(mode="after")
    def _check_mode(self):
        if self.mode == FeatureMode.DENSE and self.n_contexts != 1:
            raise ValueError("n_contexts only applies to tabular feature maps")
        return self

    @classmethod
    def context_free(cls, n_actions: int) -> "FeatureMap":
        return cls(mode=FeatureMode.TABULAR, n_actions=n_actions, n_contexts=1)

    @property
    def dim(self) -> int:
        if self.mode == FeatureMode.TABULAR:
            return self.n_contexts * self.n_actions
        return self.context_dim * self.n_actions

    @property
    def action_space(self) -> ActionSpace:
        return ActionSpace(n_actions=self.n_actions)

    def as_contexts(self, contexts) -> np.ndarray:
        """Validate and normalize a batch of contexts.

        Tabular batches become an int array of shape (n,); dense batches a float
        array of shape (n, context_dim). A single context is promoted to a batch of one.
        """
        if self.mode == FeatureMode.TABULAR:
            ids = np.atleast_1d(np.asarray(contexts))
            if ids.ndim != 1 or not np.issubdtype(ids.dtype, np.integer):
                raise InputError(f"Tabular contexts must be integer ids, got array of shape {ids.shape} and dtype {ids.dtype}")
            if ids.size and (ids.min() < 0 or ids.max() >= self.n_contexts):
                raise InputError(f"Context id outside [0, {self.n_contexts})")
            return ids.astype(np.int64, copy=False)

        vectors = np.asarray(contexts, dtype=float)
        if vectors.ndim == 1:
            vectors = vectors[None, :]
        if vectors.ndim != 2 or vectors.shape[1] != self.context_dim:
            raise InputError(f"Dense contexts must have shape (n, {self.context_dim}), got {vectors.shape}")
        return vectors

    def evaluate(self, context, action: int) -> np.ndarray:
        """f(x, a) for a single context and action."""
        return self.features(context, np.array([action]))[0]

    def features(self, contexts, actions) -> np.ndarray:
        """Feature rows f(x_t, a_t), shape (n, d)."""
        contexts = self.as_contexts(contexts)
        actions = np.asarray(actions, dtype=np.int64)
        n = actions.shape[0]
        out = np.zeros((n, self.dim))
        if self.mode == FeatureMode.TABULAR:
            out[np.arange(n), contexts * self.n_actions + actions] = 1.0
            return out
        blocks = out.reshape(n, self.n_actions, self.context_dim)
        blocks[np.arange(n), actions] = contexts
        return out

    def action_features(self, contexts) -> np.ndarray:
        """Features of every action for each context, shape (n, K, d)."""
        contexts = self.as_contexts(contexts)
        n = contexts.shape[0]
        K = self.n_actions
        out = np.zeros((n, K, self.dim))
        if self.mode == FeatureMode.TABULAR:
            rows = np.repeat(np.arange(n), K)
            acts = np.tile(np.arange(K), n)
            out[rows, acts, np.repeat(contexts, K) * K + acts] = 1.0
            return out
        blocks = out.reshape(n, K, K, self.context_dim)
        for a in range(K):
            blocks[:, a, a, :] = contexts
        return out

    def logits(self, theta: np.ndarray, contexts) -> np.ndarray:
        """theta^T f(x, a) for all actions, shape (n, K), without materializing features."""
        contexts = self.as_contexts(contexts)
        if self.mode == FeatureMode.TABULAR:
            return theta.reshape(self.n_contexts, self.n_actions)[contexts]
        return contexts @ theta.reshape(self.n_actions, self.context_dim).T

    def pullback(self, contexts, coefficients: np.ndarray) -> np.ndarray:
        """sum_t sum_a coefficients[t, a] f(x_t, a), the adjoint of :meth:`logits`."""
        contexts = self.as_contexts(contexts)
        if self.mode == FeatureMode.TABULAR:
            out = np.zeros((self.n_contexts, self.n_actions))
            np.add.at(out, contexts, coefficients)
            return out.ravel()
        return (coefficients.T @ contexts).ravel()
