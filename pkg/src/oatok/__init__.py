"""Desk-scale action tokenization toolkit.

Compares discretization schemes for continuous action chunks (per-dimension
binning, frequency-domain DCT+BPE, and an ordered learned tokenizer) under
an autoregressive policy, with an evaluation harness for compression,
decodability, and token-ordering properties.
"""

__version__ = "0.1.0"

from .binning import BinConfig, bin_detokenize, bin_tokenize
from .bpe import BpeVocab, MergeRule, bpe_decode, bpe_encode, bpe_train
from .data import (
    DatasetConfig,
    NormStats,
    TrajectoryDataset,
    chunk_stream,
    denormalize,
    fit_normalizer,
    generate_synthetic_dataset,
    normalize,
)
from .dct import DctPlan, dct2, idct, make_dct_plan
from .env import ToyEnv, ToyEnvConfig, scripted_expert
from .fast import DecodeError, FastConfig, FastTokenizer, fast_fit, load_fast, save_fast
from .fsq import FsqResult, code_to_index, codebook_size, fsq_bound, fsq_quantize, index_to_code
from .oat import (
    NestedDropoutDist,
    OatConfig,
    OatTokenizer,
    build_attention_mask,
    load_oat,
    save_oat,
    train_oat,
)
from .policy import (
    PolicyConfig,
    PolicyNet,
    autoregressive_step_count,
    load_policy,
    policy_infer,
    policy_logits,
    policy_train,
    save_policy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
