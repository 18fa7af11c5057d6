"""Corpus and sentence evaluation metrics over tokenized comments:
BLEU-1..4, ROUGE-L, METEOR (exact-match variant), and CIDEr.

All operate on EvalPair(candidate, references) with lowercase string tokens.
BLEU and CIDEr are corpus-level consensus scores; ROUGE-L and METEOR are
corpus means of per-sentence scores. Percentages are on a 0..100 scale,
CIDEr on 0..10 per pair (the conventional x10 scale, disable with
scale=1.0).
"""

import math
from collections import Counter
from dataclasses import dataclass, field

METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5
CIDER_SIGMA = 6.0
CIDER_SCALE = 10.0
SENTENCE_BLEU_EPS = 1e-9


@dataclass(frozen=True)
class EvalPair:
    candidate: tuple
    references: tuple
    id: str = ""

    def __post_init__(self):
        if not self.references:
            raise ValueError("EvalPair needs at least one reference")


def make_pairs(candidates, references, ids=None):
    """Zip parallel token-sequence lists into EvalPairs. Each entry of
    `references` may be a single token list or a list of them."""
    if len(candidates) != len(references):
        raise ValueError(
            f"{len(candidates)} candidates vs {len(references)} references"
        )
    pairs = []
    for i, (c, r) in enumerate(zip(candidates, references)):
        if r and isinstance(r[0], str):
            refs = (tuple(r),)
        else:
            refs = tuple(tuple(x) for x in r)
        pid = ids[i] if ids is not None else str(i)
        pairs.append(EvalPair(tuple(c), refs, pid))
    return pairs


def _ngrams(toks, n):
    return [tuple(toks[i : i + n]) for i in range(len(toks) - n + 1)]


def _closest_ref_len(cand_len, refs):
    return min((abs(len(r) - cand_len), len(r)) for r in refs)[1]


def bleu(pairs, n_max: int = 4) -> float:
    """Corpus-level BLEU as a percentage, unsmoothed.

    Modified n-gram precisions over orders 1..n_max with uniform weights,
    multiplied by the brevity penalty (1 if c > r else exp(1 - r/c)). A
    zero-match order or an empty candidate corpus yields 0.0.
    """
    if not 1 <= n_max <= 4:
        raise ValueError(f"n_max must be in 1..4, got {n_max}")
    matched = [0] * n_max
    possible = [0] * n_max
    cand_total = 0
    ref_total = 0
    for pair in pairs:
        cand = pair.candidate
        cand_total += len(cand)
        ref_total += _closest_ref_len(len(cand), pair.references)
        for n in range(1, n_max + 1):
            cc = Counter(_ngrams(cand, n))
            if not cc:
                continue
            best = Counter()
            for r in pair.references:
                for g, k in Counter(_ngrams(r, n)).items():
                    if k > best[g]:
                        best[g] = k
            possible[n - 1] += sum(cc.values())
            matched[n - 1] += sum(min(k, best[g]) for g, k in cc.items())
    if cand_total == 0:
        return 0.0
    log_sum = 0.0
    for n in range(n_max):
        if matched[n] == 0 or possible[n] == 0:
            return 0.0
        log_sum += math.log(matched[n] / possible[n])
    bp = 1.0 if cand_total > ref_total else math.exp(1.0 - ref_total / cand_total)
    return 100.0 * bp * math.exp(log_sum / n_max)


def sentence_bleu(candidate, references, n_max: int = 4) -> float:
    """Single-pair diagnostic BLEU with add-epsilon smoothing on zero-match
    orders (the corpus-level score stays unsmoothed)."""
    cand = tuple(candidate)
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, n_max + 1):
        cc = Counter(_ngrams(cand, n))
        best = Counter()
        for r in references:
            for g, k in Counter(_ngrams(r, n)).items():
                if k > best[g]:
                    best[g] = k
        possible = sum(cc.values())
        got = sum(min(k, best[g]) for g, k in cc.items())
        p = max(got, SENTENCE_BLEU_EPS) / max(possible, SENTENCE_BLEU_EPS)
        log_sum += math.log(p)
    ref_len = _closest_ref_len(len(cand), references)
    bp = 1.0 if len(cand) > ref_len else math.exp(1.0 - ref_len / len(cand))
    return 100.0 * bp * math.exp(log_sum / n_max)


def lcs_length(a, b) -> int:
    """Classic dynamic-programming longest common subsequence length."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, 1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def _rouge_l_sentence(cand, ref) -> float:
    l = lcs_length(cand, ref)
    if l == 0:
        return 0.0
    p = l / len(cand)
    r = l / len(ref)
    beta = p / r
    return (1 + beta * beta) * r * p / (r + beta * beta * p)


def rouge_l(pairs) -> float:
    """Mean per-pair LCS F-score (beta = P/R) as a percentage; multiple
    references take the best-scoring one."""
    if not pairs:
        return 0.0
    total = sum(
        max(_rouge_l_sentence(p.candidate, r) for r in p.references) for p in pairs
    )
    return 100.0 * total / len(pairs)


def _meteor_align(cand, ref, node_cap: int = 200_000):
    """Exact-match alignment maximizing matches, then minimizing chunks.

    Branch-and-bound over candidate positions left to right; the first
    descent is the greedy alignment so a valid answer always exists even if
    the node cap trips on adversarial duplicate patterns.
    Returns (matches, chunks).
    """
    ref_by_tok = {}
    for j, t in enumerate(ref):
        ref_by_tok.setdefault(t, []).append(j)
    cand_count = Counter(cand)
    quota = {
        t: min(k, len(ref_by_tok[t])) for t, k in cand_count.items() if t in ref_by_tok
    }
    max_matches = sum(quota.values())
    if max_matches == 0:
        return 0, 0
    # remaining candidate occurrences of each type at or after position i
    remaining = [dict() for _ in range(len(cand) + 1)]
    for i in range(len(cand) - 1, -1, -1):
        remaining[i] = dict(remaining[i + 1])
        remaining[i][cand[i]] = remaining[i].get(cand[i], 0) + 1

    best_chunks = [math.inf]
    nodes = [0]

    def dfs(i, used_ref, need, matched, chunks, last):
        if chunks >= best_chunks[0]:
            return
        if matched == max_matches:
            best_chunks[0] = chunks
            return
        if nodes[0] > node_cap:
            return
        nodes[0] += 1
        tok = cand[i]
        todo = need.get(tok, 0)
        if todo > 0:
            positions = ref_by_tok[tok]
            # prefer the ref position continuing the current chunk
            ordered = sorted(
                (j for j in positions if j not in used_ref),
                key=lambda j: (
                    0 if (last is not None and i == last[0] + 1 and j == last[1] + 1) else 1,
                    j,
                ),
            )
            for j in ordered:
                cont = last is not None and i == last[0] + 1 and j == last[1] + 1
                need[tok] = todo - 1
                used_ref.add(j)
                dfs(i + 1, used_ref, need, matched + 1, chunks + (0 if cont else 1), (i, j))
                used_ref.discard(j)
                need[tok] = todo
        # skip this occurrence if later occurrences can still fill the quota
        later = remaining[i + 1].get(tok, 0)
        if later >= todo:
            dfs(i + 1, used_ref, need, matched, chunks, last)

    dfs(0, set(), dict(quota), 0, 0, None)
    return max_matches, int(best_chunks[0])


def meteor_sentence(candidate, references) -> float:
    """Sentence METEOR (exact-match unigram variant), best over references."""
    cand = tuple(candidate)
    if not cand:
        return 0.0
    best = 0.0
    for ref in references:
        if not ref:
            continue
        matches, chunks = _meteor_align(cand, tuple(ref))
        if matches == 0:
            continue
        p = matches / len(cand)
        r = matches / len(ref)
        fmean = p * r / (METEOR_ALPHA * p + (1 - METEOR_ALPHA) * r)
        frag = chunks / matches
        score = fmean * (1.0 - METEOR_GAMMA * frag**METEOR_BETA)
        best = max(best, score)
    return best


def meteor(pairs) -> float:
    """Corpus METEOR: mean of sentence scores, as a percentage."""
    if not pairs:
        return 0.0
    return 100.0 * sum(meteor_sentence(p.candidate, p.references) for p in pairs) / len(pairs)


def cider(pairs, n_max: int = 4, sigma: float = CIDER_SIGMA, scale: float = CIDER_SCALE):
    """Consensus TF-IDF n-gram scoring. Returns (corpus_mean, per_sample).

    Per order: min-clipped TF-IDF dot product over the norm product with a
    Gaussian length penalty exp(-(lc-lr)^2 / 2 sigma^2); per-pair score is
    the mean over orders 1..n_max times `scale`. IDF uses the reference
    corpus: idf = log(N) - log(max(1, df)).
    """
    if not pairs:
        return 0.0, []
    N = len(pairs)
    df = [Counter() for _ in range(n_max)]
    for pair in pairs:
        for n in range(1, n_max + 1):
            seen = set()
            for r in pair.references:
                seen.update(_ngrams(r, n))
            for g in seen:
                df[n - 1][g] += 1
    log_n = math.log(N)

    def tfidf(toks):
        vecs, norms = [], []
        for n in range(1, n_max + 1):
            vec = {
                g: k * (log_n - math.log(max(1.0, df[n - 1][g])))
                for g, k in Counter(_ngrams(toks, n)).items()
            }
            vecs.append(vec)
            norms.append(math.sqrt(sum(v * v for v in vec.values())))
        return vecs, norms

    per_sample = []
    for pair in pairs:
        cvecs, cnorms = tfidf(pair.candidate)
        acc = [0.0] * n_max
        for ref in pair.references:
            rvecs, rnorms = tfidf(ref)
            delta = len(pair.candidate) - len(ref)
            penalty = math.exp(-(delta * delta) / (2.0 * sigma * sigma))
            for n in range(n_max):
                num = 0.0
                for g, cv in cvecs[n].items():
                    rv = rvecs[n].get(g, 0.0)
                    num += min(cv, rv) * rv
                if cnorms[n] > 0 and rnorms[n] > 0:
                    acc[n] += penalty * num / (cnorms[n] * rnorms[n])
        per_sample.append(scale * sum(a / len(pair.references) for a in acc) / n_max)
    return sum(per_sample) / N, per_sample


@dataclass
class MetricReport:
    bleu1: float
    bleu2: float
    bleu3: float
    bleu4: float
    rouge_l: float
    meteor: float
    cider: float
    per_sample: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "bleu3": self.bleu3,
            "bleu4": self.bleu4,
            "rouge_l": self.rouge_l,
            "meteor": self.meteor,
            "cider": self.cider,
        }

    def table(self) -> str:
        header = f"{'BLEU-1(%)':>10} {'BLEU-2(%)':>10} {'BLEU-3(%)':>10} {'BLEU-4(%)':>10} {'ROUGE-L(%)':>11} {'METEOR(%)':>10} {'CIDEr':>7}"
        row = (
            f"{self.bleu1:>10.2f} {self.bleu2:>10.2f} {self.bleu3:>10.2f} "
            f"{self.bleu4:>10.2f} {self.rouge_l:>11.2f} {self.meteor:>10.2f} "
            f"{self.cider:>7.2f}"
        )
        return header + "\n" + row


def report(pairs) -> MetricReport:
    """Compute all seven measures from one shared tokenization."""
    cider_corpus, cider_samples = cider(pairs)
    per_sample = []
    for pair, cs in zip(pairs, cider_samples):
        per_sample.append(
            {
                "id": pair.id,
                "bleu4": sentence_bleu(pair.candidate, pair.references),
                "rouge_l": 100.0 * max(_rouge_l_sentence(pair.candidate, r) for r in pair.references)
                if pair.candidate
                else 0.0,
                "meteor": 100.0 * meteor_sentence(pair.candidate, pair.references),
                "cider": cs,
            }
        )
    return MetricReport(
        bleu1=bleu(pairs, 1),
        bleu2=bleu(pairs, 2),
        bleu3=bleu(pairs, 3),
        bleu4=bleu(pairs, 4),
        rouge_l=rouge_l(pairs),
        meteor=meteor(pairs),
        cider=cider_corpus,
        per_sample=per_sample,
    )
