"""Reference computation of the character-trigram OOV vector.

Independent port used to freeze regression values in embedding.rs.
Usage: python3 oov_reference.py WORD DIM BUCKETS SEED
"""
import sys

MASK = (1 << 64) - 1


def fnv1a(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def splitmix64(state: int) -> int:
    z = (state + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def oov(word: str, dim: int, buckets: int, seed: int):
    padded = "<" + word.lower() + ">"
    tris = [padded[i:i + 3] for i in range(len(padded) - 2)]
    acc = [0.0] * dim
    for t in tris:
        b = fnv1a(t.encode("utf-8")) % buckets
        for j in range(dim):
            z = splitmix64(seed ^ ((b * dim + j) & MASK))
            acc[j] += (z >> 11) / float(1 << 53) * 2.0 - 1.0
    acc = [a / len(tris) for a in acc]
    norm = sum(a * a for a in acc) ** 0.5
    return [a / norm for a in acc]


if __name__ == "__main__":
    word, dim, buckets, seed = sys.argv[1], int(sys.argv[2]), int(sys.argv[3]), int(sys.argv[4])
    print([repr(x) for x in oov(word, dim, buckets, seed)])
