from collections import defaultdict, namedtuple

Point = namedtuple("Point", ["x", "y"])


def scale(p, k=2):
    return Point(p.x * k, p.y * k)


def stats(*vals, **opts):
    lo, *mid, hi = sorted(vals)
    return {"lo": lo, "hi": hi, "mid": mid, **opts}


p = scale(Point(1, 2), k=3)
print(p, p._replace(x=0))
print(stats(5, 1, 4, 2, tag="t"))
groups = defaultdict(list)
for word in "apple avocado banana blueberry cherry".split():
    groups[word[0]].append(word)
print(dict(groups))
m = [[1, 2, 3], [4, 5, 6]]
print(m[1][::2], m[-1][-1], 1 < 2 < 3, not 1 == 2, -2 ** 2, (-2) ** 2, 2 ** -1)
x = y = 5
x += 1
y //= 2
print(x, y, 7 % 3, 7 // -2, ~5, 5 ^ 3, 6 & 3, 6 | 1, 1 << 4, 256 >> 2)
if (n := len(m)) > 1:
    print("walrus", n)
t = 1,
u = ()
print(t, u, {**{"a": 1}, "b": 2}, {1, 2} | {3}, [*range(3), *"ab"])
del m[0]
print(m, isinstance(p, tuple), type(p).__name__)
assert p.x == 3, "bad x"
print(1_000_000, 0x1f, 0o17, 0b101, 1e3, 2.5j, .5)
