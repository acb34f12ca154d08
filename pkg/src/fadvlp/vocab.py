"""Closed word-level vocabulary with special and mode tokens."""

import re

PAD, BOS, EOS = "[PAD]", "[BOS]", "[EOS]"
ALIGN, RELCAP, FUSE = "[ALIGN]", "[RELCAP]", "[FUSE]"
SPECIALS = (PAD, BOS, EOS, ALIGN, RELCAP, FUSE)

_TOKEN_RE = re.compile(r"\[[A-Z]+\]|[a-z0-9]+|\.")


def tokenize(text):
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """Fixed id assignment: specials first, then sorted words."""

    def __init__(self, words):
        words = sorted(set(words) - set(SPECIALS))
        self.tokens = list(SPECIALS) + words
        self.ids = {t: i for i, t in enumerate(self.tokens)}
        self.pad_id = self.ids[PAD]
        self.bos_id = self.ids[BOS]
        self.eos_id = self.ids[EOS]
        self.mode_ids = {"align": self.ids[ALIGN], "relcap": self.ids[RELCAP], "fuse": self.ids[FUSE]}

    def __len__(self):
        return len(self.tokens)

    def encode(self, text, max_len=None):
        """[BOS] words [EOS], optionally right-padded with [PAD] to max_len."""
        ids = [self.bos_id]
        for tok in tokenize(text):
            try:
                ids.append(self.ids[tok])
            except KeyError:
                raise ValueError(f"token {tok!r} not in the closed vocabulary") from None
        ids.append(self.eos_id)
        if max_len is not None:
            if len(ids) > max_len:
                raise ValueError(f"sequence of {len(ids)} tokens exceeds max length {max_len}")
            ids = ids + [self.pad_id] * (max_len - len(ids))
        return ids

    def decode(self, ids):
        """Words between [BOS] and the first [EOS]; specials are dropped."""
        words = []
        for i in ids:
            tok = self.tokens[int(i)]
            if tok == EOS:
                break
            if tok in SPECIALS:
                continue
            words.append(tok)
        return " ".join(words)
