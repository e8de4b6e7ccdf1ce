def square(v):
    return v * v


def is_odd(v):
    return v % 2 == 1


x = 100
squares = [square(x) for x in range(6)]
print(x, squares)
odds = [square(v) for v in range(10) if is_odd(v)]
print(odds)
pairs = [(a, b) for a in range(3) for b in range(a) if a + b > 1]
print(pairs)
nested = [[square(i + j) for j in range(3)] for i in range(2)]
print(nested)
lookup = {k: square(k) for k in range(4)}
print(sorted(lookup.items()))
unique = {v % 3 for v in range(10)}
print(sorted(unique))
total = sum(square(v) for v in range(5))
print(total)
words = ["alpha", "beta", "gamma"]
lengths = [len(w) for w in words if w != "beta"]
print(lengths)
print([w.upper() for w in words][::-1])
