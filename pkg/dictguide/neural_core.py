# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           neural_core.py

# DESCRIPTION:    The trainable model, written directly in numpy with
#                 hand-derived backward passes:
#                   - image encoder: glyph + positional embedding, then a
#                     parallel attention layer (L learned queries over the
#                     W grid cells);
#                   - recognizer head on the image features;
#                   - text encoder: token + positional embedding through two
#                     masked self-attention blocks;
#                   - projections l_v / l_t, cosine similarity, the i2t / t2i
#                     softmaxes and the contrastive loss.
#                 Every batched forward returns a cache that its backward
#                 consumes; gradients accumulate into a dict keyed like the
#                 parameters.

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0

# Imports
# -------------------------------------------------------------------------
# Python:
import hashlib
import logging
import math
import struct
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

# 3rd party:
import numpy as np

# Local
from dictguide.exceptions import (CorruptFile, DegenerateEmbedding,
                                  InvalidConfig, NonFiniteParams, TooLong,
                                  VersionMismatch)
from dictguide.glyph_world import (BLANK, CHAR_TO_ID, GRID_WIDTH, NUM_CHANNELS,
                                   GlyphImage)
from dictguide.lexicon_index import ALPHABET
from dictguide.params import params as defaults
from dictguide.utilities import data_connections
from dictguide.utilities.processing_steps import check_at_least, check_positive

logger = logging.getLogger(__name__)

EOS = BLANK
LOG_FLOOR = 1e-12
NORM_FLOOR = 1e-12

MODEL_MAGIC = b'VDMP'
MODEL_FORMAT_VERSION = 1
_MODEL_HEADER = struct.Struct('<4sH8I')


# Define ModelDims / ITCConfig
# -------------------------------------------------------------------------
@dataclass(frozen=True)
class ModelDims:
    """
    seq_len is L, channels is C, proj_dim is D, num_classes is K (36
    characters plus EOS), grid_width is W. The text vocabulary is the same
    37 symbols, EOS doubling as padding.
    """
    seq_len: int = defaults['seq_len']
    channels: int = defaults['channels']
    proj_dim: int = defaults['proj_dim']
    num_classes: int = NUM_CHANNELS
    grid_width: int = GRID_WIDTH
    ffn_hidden: int = defaults['ffn_hidden']
    vocab: int = NUM_CHANNELS
    num_blocks: int = 2

    def __post_init__(self):
        for name in ('seq_len', 'channels', 'proj_dim', 'ffn_hidden', 'num_blocks'):
            check_at_least(name, getattr(self, name), 1)
        if self.seq_len < defaults['max_word_length']:
            raise InvalidConfig(f"seq_len must be >= {defaults['max_word_length']}")
        if self.num_classes != NUM_CHANNELS or self.vocab != NUM_CHANNELS:
            raise InvalidConfig(f"num_classes and vocab are fixed at {NUM_CHANNELS}")
        if self.grid_width != GRID_WIDTH:
            raise InvalidConfig(f"grid_width is fixed at {GRID_WIDTH}")

    def as_tuple(self) -> Tuple[int, ...]:
        return (self.seq_len, self.channels, self.proj_dim, self.num_classes,
                self.grid_width, self.ffn_hidden, self.vocab, self.num_blocks)


@dataclass(frozen=True)
class ITCConfig:
    temperature: float = defaults['temperature']

    def __post_init__(self):
        check_positive('temperature', self.temperature)

    @classmethod
    def coerce(cls, value: Union[float, 'ITCConfig']) -> 'ITCConfig':
        """A bare temperature or an existing config."""
        return value if isinstance(value, cls) else cls(float(value))


# Define parameter layout
# -------------------------------------------------------------------------
BACKBONE = ('glyph_embed', 'image_pos_embed', 'pa_query', 'pa_key', 'pa_value')
HEAD = ('recog_head_w', 'recog_head_b')
PROJECTION = ('proj_image', 'proj_text')
_BLOCK_TENSORS = ('wq', 'wk', 'wv', 'wo', 'w1', 'b1', 'w2', 'b2')


def text_group(dims: ModelDims) -> Tuple[str, ...]:
    names = ['text_embed', 'text_pos_embed']
    for b in range(dims.num_blocks):
        names += [f'block{b}_{t}' for t in _BLOCK_TENSORS]
    return tuple(names)


def param_groups(dims: ModelDims) -> Dict[str, Tuple[str, ...]]:
    return {'backbone': BACKBONE, 'head': HEAD, 'text': text_group(dims),
            'projection': PROJECTION}


def param_shapes(dims: ModelDims) -> 'OrderedDict[str, Tuple[int, ...]]':
    L, C, D, K = dims.seq_len, dims.channels, dims.proj_dim, dims.num_classes
    W, H, V = dims.grid_width, dims.ffn_hidden, dims.vocab
    shapes = OrderedDict([
        ('glyph_embed', (K, C)),
        ('image_pos_embed', (W, C)),
        ('pa_query', (L, C)),
        ('pa_key', (C, C)),
        ('pa_value', (C, C)),
        ('recog_head_w', (C, K)),
        ('recog_head_b', (K,)),
        ('text_embed', (V, C)),
        ('text_pos_embed', (L, C)),
    ])
    for b in range(dims.num_blocks):
        for t in ('wq', 'wk', 'wv', 'wo'):
            shapes[f'block{b}_{t}'] = (C, C)
        shapes[f'block{b}_w1'] = (C, H)
        shapes[f'block{b}_b1'] = (H,)
        shapes[f'block{b}_w2'] = (H, C)
        shapes[f'block{b}_b2'] = (C,)
    shapes['proj_image'] = (C, D)
    shapes['proj_text'] = (C, D)
    return shapes


class ModelParams:
    """
    Named float64 tensors of one model. The image encoder used by the
    recognizer and by the matcher reads the same backbone arrays; there is
    only one copy of them.
    """

    def __init__(self, dims: ModelDims, tensors: 'OrderedDict[str, np.ndarray]'):
        shapes = param_shapes(dims)
        if list(tensors) != list(shapes):
            raise InvalidConfig("parameter names do not match the model layout")
        for name, shape in shapes.items():
            if tensors[name].shape != shape:
                raise InvalidConfig(f"{name} has shape {tensors[name].shape}, expected {shape}")
        self.dims = dims
        self.tensors = tensors

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def names(self) -> List[str]:
        return list(self.tensors)

    def copy(self) -> 'ModelParams':
        return ModelParams(self.dims, OrderedDict((k, v.copy()) for k, v in self.tensors.items()))

    def zeros_like(self) -> Dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}

    def require_finite(self, names: Iterable[str]) -> None:
        for name in names:
            if not np.all(np.isfinite(self.tensors[name])):
                raise NonFiniteParams(f"parameter {name} holds non-finite values")

    def to_bytes(self) -> bytes:
        return b''.join(v.astype('<f8').tobytes() for v in self.tensors.values())


# Define init_params()
# -------------------------------------------------------------------------
def init_params(dims: ModelDims = None, seed: int = defaults['init_seed']) -> ModelParams:
    """
    Deterministic initialization.

    The parallel-attention queries start as a scaled copy of the image
    positional embedding and the key / value maps as the identity, so that
    query i initially attends to cell i; training refines the alignment
    instead of having to discover it.
    """
    dims = dims or ModelDims()
    rng = np.random.default_rng(seed)
    C, H = dims.channels, dims.ffn_hidden
    t = OrderedDict()
    for name, shape in param_shapes(dims).items():
        if name in ('glyph_embed', 'image_pos_embed'):
            t[name] = rng.normal(0.0, 1.0, shape)
        elif name in ('text_embed', 'text_pos_embed'):
            t[name] = rng.normal(0.0, 0.5, shape)
        elif name.endswith(('_b', '_b1', '_b2')):
            t[name] = np.zeros(shape)
        elif name.endswith('_w2'):
            t[name] = rng.normal(0.0, 1.0 / math.sqrt(H), shape)
        else:
            t[name] = rng.normal(0.0, 1.0 / math.sqrt(C), shape)
    if C >= dims.grid_width:
        # orthogonal rows of norm sqrt(C): cells never compete for a query
        q, _ = np.linalg.qr(rng.normal(size=(C, dims.grid_width)))
        t['image_pos_embed'] = math.sqrt(C) * q.T
    t['pa_key'] = np.eye(C)
    t['pa_value'] = np.eye(C)
    aligned = min(dims.seq_len, dims.grid_width)
    t['pa_query'][:aligned] = 2.5 * t['image_pos_embed'][:aligned]
    return ModelParams(dims, t)


# Define numeric helpers
# -------------------------------------------------------------------------
def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-subtracted softmax; -inf entries get probability 0."""
    shifted = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = z - np.max(z, axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def _softmax_backward(a: np.ndarray, da: np.ndarray) -> np.ndarray:
    return a * (da - (da * a).sum(axis=-1, keepdims=True))


def _unit_rows(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms < NORM_FLOOR):
        raise DegenerateEmbedding("embedding norm below 1e-12; the model is untrained or collapsed")
    return x / norms, norms


def _unit_rows_backward(unit: np.ndarray, norms: np.ndarray, d_unit: np.ndarray) -> np.ndarray:
    return (d_unit - unit * (unit * d_unit).sum(axis=-1, keepdims=True)) / norms


# Define batched image encoder
# -------------------------------------------------------------------------
def stack_images(images: Sequence[GlyphImage]) -> np.ndarray:
    return np.stack([img.cells for img in images]).astype(np.float64, copy=False)


def _image_forward(p: ModelParams, x: np.ndarray):
    """x: (B, W, K) cells -> features (B, L, C)."""
    scale = 1.0 / math.sqrt(p.dims.channels)
    g = x @ p['glyph_embed']
    e = g + p['image_pos_embed']
    # positions steer the attention only; values carry the glyph content
    keys = e @ p['pa_key']
    values = g @ p['pa_value']
    attn = softmax(np.einsum('lc,bwc->blw', p['pa_query'], keys) * scale)
    feats = attn @ values
    return feats, (x, g, e, keys, values, attn)


def _image_backward(p: ModelParams, d_feats: np.ndarray, cache, grads: Dict[str, np.ndarray]) -> None:
    x, g, e, keys, values, attn = cache
    scale = 1.0 / math.sqrt(p.dims.channels)
    d_attn = d_feats @ values.transpose(0, 2, 1)
    d_values = attn.transpose(0, 2, 1) @ d_feats
    d_scores = _softmax_backward(attn, d_attn) * scale
    grads['pa_query'] += np.einsum('blw,bwc->lc', d_scores, keys)
    d_keys = np.einsum('blw,lc->bwc', d_scores, p['pa_query'])
    grads['pa_key'] += np.einsum('bwc,bwd->cd', e, d_keys)
    grads['pa_value'] += np.einsum('bwc,bwd->cd', g, d_values)
    d_e = d_keys @ p['pa_key'].T
    d_g = d_e + d_values @ p['pa_value'].T
    grads['glyph_embed'] += np.einsum('bwk,bwc->kc', x, d_g)
    grads['image_pos_embed'] += d_e.sum(axis=0)


# Define batched text encoder
# -------------------------------------------------------------------------
def encode_texts(texts: Sequence[str], seq_len: int) -> Tuple[np.ndarray, np.ndarray]:
    """Token ids (B, L) padded with EOS, plus the text lengths."""
    ids = np.full((len(texts), seq_len), EOS, dtype=np.int64)
    lengths = np.zeros(len(texts), dtype=np.int64)
    for row, text in enumerate(texts):
        if len(text) > seq_len:
            raise TooLong(f"text {text!r} longer than the sequence length {seq_len}")
        ids[row, :len(text)] = [CHAR_TO_ID[ch] for ch in text]
        lengths[row] = len(text)
    return ids, lengths


def key_mask(lengths: np.ndarray, seq_len: int) -> np.ndarray:
    """Attendable positions: the characters plus the first EOS."""
    return np.arange(seq_len)[None, :] < np.minimum(lengths + 1, seq_len)[:, None]


def _block_forward(p: ModelParams, b: int, h: np.ndarray, mask: np.ndarray):
    pre = f'block{b}_'
    scale = 1.0 / math.sqrt(p.dims.channels)
    q = h @ p[pre + 'wq']
    k = h @ p[pre + 'wk']
    v = h @ p[pre + 'wv']
    scores = np.where(mask[:, None, :], (q @ k.transpose(0, 2, 1)) * scale, -np.inf)
    attn = softmax(scores)
    o = attn @ v
    h1 = h + o @ p[pre + 'wo']
    z = np.tanh(h1 @ p[pre + 'w1'] + p[pre + 'b1'])
    h2 = h1 + z @ p[pre + 'w2'] + p[pre + 'b2']
    return h2, (h, q, k, v, attn, o, h1, z)


def _block_backward(p: ModelParams, b: int, d_h2: np.ndarray, cache, grads) -> np.ndarray:
    pre = f'block{b}_'
    scale = 1.0 / math.sqrt(p.dims.channels)
    h, q, k, v, attn, o, h1, z = cache
    grads[pre + 'w2'] += np.einsum('blh,blc->hc', z, d_h2)
    grads[pre + 'b2'] += d_h2.sum(axis=(0, 1))
    d_u = (d_h2 @ p[pre + 'w2'].T) * (1.0 - z ** 2)
    grads[pre + 'w1'] += np.einsum('blc,blh->ch', h1, d_u)
    grads[pre + 'b1'] += d_u.sum(axis=(0, 1))
    d_h1 = d_h2 + d_u @ p[pre + 'w1'].T
    grads[pre + 'wo'] += np.einsum('blc,bld->cd', o, d_h1)
    d_o = d_h1 @ p[pre + 'wo'].T
    d_attn = d_o @ v.transpose(0, 2, 1)
    d_v = attn.transpose(0, 2, 1) @ d_o
    d_scores = _softmax_backward(attn, d_attn) * scale
    d_q = d_scores @ k
    d_k = d_scores.transpose(0, 2, 1) @ q
    grads[pre + 'wq'] += np.einsum('blc,bld->cd', h, d_q)
    grads[pre + 'wk'] += np.einsum('blc,bld->cd', h, d_k)
    grads[pre + 'wv'] += np.einsum('blc,bld->cd', h, d_v)
    return (d_h1 + d_q @ p[pre + 'wq'].T + d_k @ p[pre + 'wk'].T
            + d_v @ p[pre + 'wv'].T)


def _text_forward(p: ModelParams, ids: np.ndarray, lengths: np.ndarray):
    mask = key_mask(lengths, p.dims.seq_len)
    h = p['text_embed'][ids] + p['text_pos_embed']
    caches = []
    for b in range(p.dims.num_blocks):
        h, cache = _block_forward(p, b, h, mask)
        caches.append(cache)
    return h, (ids, caches)


def _text_backward(p: ModelParams, d_h: np.ndarray, cache, grads) -> None:
    ids, caches = cache
    for b in reversed(range(p.dims.num_blocks)):
        d_h = _block_backward(p, b, d_h, caches[b], grads)
    np.add.at(grads['text_embed'], ids, d_h)
    grads['text_pos_embed'] += d_h.sum(axis=0)


# Define projection
# -------------------------------------------------------------------------
def _project_forward(feats: np.ndarray, weight: np.ndarray):
    # mean-pooling commutes with the linear map, so pool first
    pooled = feats.mean(axis=1)
    return pooled @ weight, pooled


def _project_backward(d_emb: np.ndarray, pooled: np.ndarray, name: str,
                      weight: np.ndarray, seq_len: int, grads) -> np.ndarray:
    grads[name] += pooled.T @ d_emb
    d_pooled = d_emb @ weight.T / seq_len
    return np.repeat(d_pooled[:, None, :], seq_len, axis=1)


# Define public single-sample types
# -------------------------------------------------------------------------
@dataclass(eq=False)
class FeatureSequence:
    rows: np.ndarray
    role: str


@dataclass(eq=False)
class CharDistribution:
    probs: np.ndarray


# Define image_encode() / text_encode()
# -------------------------------------------------------------------------
def image_encode(p: ModelParams, image: GlyphImage) -> FeatureSequence:
    """Image sequence features I (L x C)."""
    p.require_finite(BACKBONE)
    feats, _ = _image_forward(p, image.cells[None])
    return FeatureSequence(feats[0], 'image')


def text_encode(p: ModelParams, text: str) -> FeatureSequence:
    """Text sequence features T (L x C); raises TooLong past L characters."""
    p.require_finite(text_group(p.dims))
    ids, lengths = encode_texts([text], p.dims.seq_len)
    feats, _ = _text_forward(p, ids, lengths)
    return FeatureSequence(feats[0], 'text')


# Define recognize()
# -------------------------------------------------------------------------
def decode_greedy(probs: np.ndarray) -> str:
    """Per-position argmax, cut at the first EOS."""
    chars = []
    for cls in probs.argmax(axis=-1):
        if cls == EOS:
            break
        chars.append(ALPHABET[cls])
    return ''.join(chars)


def recognize_batch(p: ModelParams, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    """Batched first forward: features, per-position distributions, predictions."""
    p.require_finite(BACKBONE + HEAD)
    feats, _ = _image_forward(p, x)
    probs = softmax(feats @ p['recog_head_w'] + p['recog_head_b'])
    return feats, probs, [decode_greedy(row) for row in probs]


def recognize(p: ModelParams, image: GlyphImage) -> Tuple[FeatureSequence, CharDistribution, str]:
    """y_hat = V(x): the visual prediction; may be '' when position 0 reads EOS."""
    feats, probs, words = recognize_batch(p, image.cells[None])
    return FeatureSequence(feats[0], 'image'), CharDistribution(probs[0]), words[0]


# Define recognition_loss()
# -------------------------------------------------------------------------
def _recognition_targets(labels: Sequence[str], seq_len: int) -> Tuple[np.ndarray, np.ndarray]:
    """Target ids (B, L) and per-position weights averaging over len+1 positions."""
    targets, lengths = encode_texts(labels, seq_len)
    counts = np.minimum(lengths + 1, seq_len)
    live = np.arange(seq_len)[None, :] < counts[:, None]
    weights = live / counts[:, None]
    return targets, weights


def _recognition_loss_batch(probs: np.ndarray, targets: np.ndarray,
                            weights: np.ndarray) -> Tuple[float, np.ndarray]:
    batch = probs.shape[0]
    picked = np.take_along_axis(probs, targets[..., None], axis=-1)[..., 0]
    floored = picked < LOG_FLOOR
    loss = float(np.sum(weights * -np.log(np.maximum(picked, LOG_FLOOR))) / batch)
    d_logits = probs.copy()
    np.put_along_axis(d_logits, targets[..., None],
                      np.take_along_axis(d_logits, targets[..., None], axis=-1) - 1.0, axis=-1)
    d_logits *= (weights * ~floored)[..., None] / batch
    return loss, d_logits


def recognition_loss(dist: CharDistribution, label: str) -> Tuple[float, np.ndarray]:
    """
    Mean negative log-likelihood over the label positions plus one EOS.

    Returns the loss and its gradient with respect to the recognizer logits
    (L x K); recognition_forward_backward() carries it to the parameters.
    """
    targets, weights = _recognition_targets([label], dist.probs.shape[0])
    loss, d_logits = _recognition_loss_batch(dist.probs[None], targets, weights)
    return loss, d_logits[0]


def recognition_forward_backward(p: ModelParams, x: np.ndarray,
                                 labels: Sequence[str]) -> Tuple[float, Dict[str, np.ndarray]]:
    p.require_finite(BACKBONE + HEAD)
    feats, cache = _image_forward(p, x)
    probs = softmax(feats @ p['recog_head_w'] + p['recog_head_b'])
    targets, weights = _recognition_targets(labels, p.dims.seq_len)
    loss, d_logits = _recognition_loss_batch(probs, targets, weights)
    grads = p.zeros_like()
    grads['recog_head_w'] += np.einsum('blc,blk->ck', feats, d_logits)
    grads['recog_head_b'] += d_logits.sum(axis=(0, 1))
    _image_backward(p, d_logits @ p['recog_head_w'].T, cache, grads)
    return loss, grads


# Define project() / cosine_similarity()
# -------------------------------------------------------------------------
def project(p: ModelParams, f: FeatureSequence) -> np.ndarray:
    """l_v or l_t by role, mean-pooled over L to one D-vector."""
    weight = p['proj_image'] if f.role == 'image' else p['proj_text']
    emb, _ = _project_forward(f.rows[None], weight)
    return emb[0]


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    unit_u, _ = _unit_rows(np.asarray(u, dtype=np.float64)[None])
    unit_v, _ = _unit_rows(np.asarray(v, dtype=np.float64)[None])
    return float(np.clip(unit_u[0] @ unit_v[0], -1.0, 1.0))


def similarity_matrix(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Cosine similarities between the rows of u (N x D) and v (T x D)."""
    unit_u, _ = _unit_rows(u)
    unit_v, _ = _unit_rows(v)
    return unit_u @ unit_v.T


def embed_images(p: ModelParams, x: np.ndarray) -> np.ndarray:
    p.require_finite(BACKBONE + ('proj_image',))
    feats, _ = _image_forward(p, x)
    return _project_forward(feats, p['proj_image'])[0]


def embed_texts(p: ModelParams, texts: Sequence[str]) -> np.ndarray:
    p.require_finite(text_group(p.dims) + ('proj_text',))
    ids, lengths = encode_texts(texts, p.dims.seq_len)
    feats, _ = _text_forward(p, ids, lengths)
    return _project_forward(feats, p['proj_text'])[0]


# Define i2t_distribution() / t2i_distribution()
# -------------------------------------------------------------------------
def i2t_distribution(image_emb: np.ndarray, text_embs: np.ndarray, temperature: float) -> np.ndarray:
    """p_i2t over the given texts: softmax of cosine similarity / tau."""
    check_positive('temperature', temperature)
    sims = similarity_matrix(np.asarray(image_emb)[None], np.atleast_2d(text_embs))[0]
    return softmax(sims / temperature)


def t2i_distribution(text_emb: np.ndarray, image_embs: np.ndarray, temperature: float) -> np.ndarray:
    """p_t2i over the given images."""
    check_positive('temperature', temperature)
    sims = similarity_matrix(np.asarray(text_emb)[None], np.atleast_2d(image_embs))[0]
    return softmax(sims / temperature)


# Define itc_loss()
# -------------------------------------------------------------------------
def itc_loss(image_embs: np.ndarray,
             text_embs: np.ndarray,
             temperature: float,
             labels: Optional[Sequence[str]] = None,
             texts: Optional[Sequence[str]] = None) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Image-text contrastive loss over N images and T >= N texts, where text i
    is the label of image i for i < N and texts N.. are resemblants.

    i2t for image i is a softmax over all T texts; t2i for label text j is a
    softmax over the N images (resemblants have no image and get no t2i
    term). The loss is the mean of the two cross-entropies against the
    matching pair, halved and summed. When labels / texts are given, a text
    spelled exactly like image i's label (a repeated label in the batch, or
    a resemblant that happens to equal another label) is not used as a
    negative for image i, and likewise for repeated images in t2i.

    Returns (loss, d loss / d image_embs, d loss / d text_embs).
    """
    check_positive('temperature', temperature)
    n_img, n_txt = len(image_embs), len(text_embs)
    if n_img < 2 or n_txt < n_img:
        raise InvalidConfig(f"itc needs N >= 2 images and at least N texts, got {n_img}, {n_txt}")
    unit_i, norm_i = _unit_rows(image_embs)
    unit_t, norm_t = _unit_rows(text_embs)
    logits = (unit_i @ unit_t.T) / temperature
    eye = np.eye(n_img, dtype=bool)

    if labels is not None and texts is not None:
        labels_arr = np.asarray(labels, dtype=object)
        texts_arr = np.asarray(texts, dtype=object)
        same_i2t = (labels_arr[:, None] == texts_arr[None, :]).astype(bool)
        same_i2t[:, :n_img] &= ~eye
        same_t2i = (labels_arr[:, None] == labels_arr[None, :]).astype(bool) & ~eye
    else:
        same_i2t = np.zeros((n_img, n_txt), dtype=bool)
        same_t2i = np.zeros((n_img, n_img), dtype=bool)

    rows = np.arange(n_img)
    logp_i2t = log_softmax(np.where(same_i2t, -np.inf, logits))
    logp_t2i = log_softmax(np.where(same_t2i, -np.inf, logits[:, :n_img].T))
    diag_i2t = logp_i2t[rows, rows]
    diag_t2i = logp_t2i[rows, rows]
    floor = math.log(LOG_FLOOR)
    loss = 0.5 * (np.mean(-np.maximum(diag_i2t, floor)) + np.mean(-np.maximum(diag_t2i, floor)))

    d_i2t = np.exp(logp_i2t)
    d_i2t[rows, rows] -= 1.0
    d_i2t *= (diag_i2t >= floor)[:, None] * (0.5 / n_img)
    d_t2i = np.exp(logp_t2i)
    d_t2i[rows, rows] -= 1.0
    d_t2i *= (diag_t2i >= floor)[:, None] * (0.5 / n_img)

    d_sims = d_i2t / temperature
    d_sims[:, :n_img] += d_t2i.T / temperature
    d_image = _unit_rows_backward(unit_i, norm_i, d_sims @ unit_t)
    d_text = _unit_rows_backward(unit_t, norm_t, d_sims.T @ unit_i)
    return float(loss), d_image, d_text


def itc_forward_backward(p: ModelParams,
                         x: np.ndarray,
                         labels: Sequence[str],
                         resemblants: Sequence[str],
                         temperature: float) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Contrastive loss of one batch: N images, their N labels and the
    N * (M - 1) resemblants, with gradients for every parameter the matcher
    touches (backbone, text encoder, both projections).
    """
    names = BACKBONE + text_group(p.dims) + PROJECTION
    p.require_finite(names)
    seq_len = p.dims.seq_len
    img_feats, img_cache = _image_forward(p, x)
    img_emb, img_pooled = _project_forward(img_feats, p['proj_image'])
    texts = list(labels) + list(resemblants)
    ids, lengths = encode_texts(texts, seq_len)
    txt_feats, txt_cache = _text_forward(p, ids, lengths)
    txt_emb, txt_pooled = _project_forward(txt_feats, p['proj_text'])

    loss, d_img_emb, d_txt_emb = itc_loss(img_emb, txt_emb, temperature, labels, texts)

    grads = p.zeros_like()
    d_img_feats = _project_backward(d_img_emb, img_pooled, 'proj_image', p['proj_image'], seq_len, grads)
    _image_backward(p, d_img_feats, img_cache, grads)
    d_txt_feats = _project_backward(d_txt_emb, txt_pooled, 'proj_text', p['proj_text'], seq_len, grads)
    _text_backward(p, d_txt_feats, txt_cache, grads)
    return loss, grads


# Define overall_loss()
# -------------------------------------------------------------------------
def overall_loss(recog: float, sitm: float, lambda1: float, lambda2: float) -> float:
    """lambda1 * L_recog + lambda2 * L_SITM."""
    check_positive('lambda1', lambda1, allow_zero=True)
    check_positive('lambda2', lambda2, allow_zero=True)
    return lambda1 * recog + lambda2 * sitm


def overall_forward_backward(p: ModelParams,
                             x: np.ndarray,
                             labels: Sequence[str],
                             resemblants: Sequence[str],
                             lambda1: float,
                             lambda2: float,
                             temperature: float) -> Tuple[float, Dict[str, np.ndarray]]:
    """Weighted loss and gradients; a zero weight skips that loss entirely."""
    grads = p.zeros_like()
    recog = sitm = 0.0
    if lambda1 > 0:
        recog, g = recognition_forward_backward(p, x, labels)
        for name in grads:
            grads[name] += lambda1 * g[name]
    if lambda2 > 0:
        sitm, g = itc_forward_backward(p, x, labels, resemblants, temperature)
        for name in grads:
            grads[name] += lambda2 * g[name]
    return overall_loss(recog, sitm, lambda1, lambda2), grads


# Define optimizers
# -------------------------------------------------------------------------
class SGD:
    """Plain gradient descent with a fixed step."""

    def __init__(self, lr: float):
        self.lr = check_positive('lr', lr)

    def step(self, p: ModelParams, grads: Dict[str, np.ndarray], names: Iterable[str]) -> None:
        for name in names:
            p.tensors[name] -= self.lr * grads[name]


class Adam:
    """Adam with bias correction; moment buffers are created lazily per tensor."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = check_positive('lr', lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, p: ModelParams, grads: Dict[str, np.ndarray], names: Iterable[str]) -> None:
        self.t += 1
        for name in names:
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            p.tensors[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind: str, lr: float):
    if kind == 'sgd':
        return SGD(lr)
    if kind == 'adam':
        return Adam(lr)
    raise InvalidConfig(f"unknown optimizer {kind!r}, expected 'sgd' or 'adam'")


# Define gradient_check()
# -------------------------------------------------------------------------
def gradient_check(loss_and_grads: Callable[[ModelParams], Tuple[float, Dict[str, np.ndarray]]],
                   p: ModelParams,
                   names: Optional[Iterable[str]] = None,
                   eps: float = 1e-5,
                   num_checks: int = 6,
                   seed: int = 0,
                   floor: float = 1e-6) -> Dict[str, float]:
    """
    Central-difference check of analytic gradients.

    For `num_checks` random entries of every named tensor, perturb by +/- eps
    and compare (L+ - L-) / 2 eps with the analytic value. Returns the
    largest relative error |a - n| / max(|a|, |n|, floor) per tensor.
    """
    rng = np.random.default_rng(seed)
    _, analytic = loss_and_grads(p)
    errors: Dict[str, float] = {}
    for name in (names or p.names()):
        tensor = p.tensors[name]
        flat = tensor.reshape(-1)
        worst = 0.0
        for idx in rng.choice(flat.size, size=min(num_checks, flat.size), replace=False):
            original = flat[idx]
            flat[idx] = original + eps
            plus, _ = loss_and_grads(p)
            flat[idx] = original - eps
            minus, _ = loss_and_grads(p)
            flat[idx] = original
            numeric = (plus - minus) / (2 * eps)
            exact = analytic[name].reshape(-1)[idx]
            worst = max(worst, abs(exact - numeric) / max(abs(exact), abs(numeric), floor))
        errors[name] = worst
    return errors


# Define save_params() / load_params()
# -------------------------------------------------------------------------
def serialize_params(p: ModelParams) -> bytes:
    """magic, version, 8 dims, float64 little-endian payload, sha256 trailer."""
    body = _MODEL_HEADER.pack(MODEL_MAGIC, MODEL_FORMAT_VERSION, *p.dims.as_tuple()) + p.to_bytes()
    return body + hashlib.sha256(body).digest()


def deserialize_params(payload: bytes, dims: Optional[ModelDims] = None) -> ModelParams:
    if len(payload) < _MODEL_HEADER.size + 32:
        raise CorruptFile("model file is truncated")
    body, checksum = payload[:-32], payload[-32:]
    magic, version, *dim_values = _MODEL_HEADER.unpack_from(body)
    if magic != MODEL_MAGIC:
        raise CorruptFile("not a model file (bad magic)")
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version}, expected {MODEL_FORMAT_VERSION}")
    try:
        file_dims = ModelDims(*dim_values)
    except InvalidConfig as err:
        raise VersionMismatch(f"model file dims are not loadable: {err}") from err
    if dims is not None and file_dims != dims:
        raise VersionMismatch(f"model file dims {file_dims} differ from expected {dims}")
    shapes = param_shapes(file_dims)
    expected = _MODEL_HEADER.size + 8 * sum(int(np.prod(s)) for s in shapes.values())
    if len(body) != expected or hashlib.sha256(body).digest() != checksum:
        raise CorruptFile("model file is truncated or its checksum does not match")
    tensors = OrderedDict()
    offset = _MODEL_HEADER.size
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        tensors[name] = np.frombuffer(body, dtype='<f8', count=count, offset=offset).astype(np.float64).reshape(shape)
        offset += 8 * count
    return ModelParams(file_dims, tensors)


def save_params(p: ModelParams, path) -> None:
    data_connections.write_bytes(path, serialize_params(p))
    logger.info("saved model to %s", path)


def load_params(path, dims: Optional[ModelDims] = None) -> ModelParams:
    return deserialize_params(data_connections.read_bytes(path), dims)
