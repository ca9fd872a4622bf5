from dysarthria_tts.acoustic_model import ModelConfig
from dysarthria_tts.text_frontend import PhraseSpec


def tiny_config(n_phones=6, n_speakers=2, **kw):
    base = dict(d_model=8, n_blocks_enc=1, n_blocks_dec=1, n_heads=2, d_ffn=12, n_mels=5,
                n_bins=8, max_seq=64)
    base.update(kw)
    return ModelConfig(n_phones=n_phones, n_speakers=n_speakers, **base)


def random_spec(rng, n_phones, max_words=5, max_word_len=3, pause_prob=0.0):
    """Random well-formed phrase; pauses (id 0) only between words."""
    n_words = int(rng.integers(1, max_words + 1))
    phones, words, used = [], [], set()
    for w in range(n_words):
        if w > 0 and rng.random() < pause_prob:
            phones.append(0)
            words.append(-1)
            used.add(w - 1)
        for _ in range(int(rng.integers(1, max_word_len + 1))):
            phones.append(int(rng.integers(1, n_phones)))
            words.append(w)
    return PhraseSpec(tuple(phones), tuple(words), n_words, frozenset(used))
