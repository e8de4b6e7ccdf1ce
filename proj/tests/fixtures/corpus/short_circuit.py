calls = []


def probe(tag, result):
    calls.append(tag)
    return result


a = probe("a", 0) and probe("b", 1)
b = probe("c", 1) or probe("d", 2)
c = probe("e", 3) if probe("f", False) else probe("g", 4)
d = probe("h", 1) and probe("i", 0) or probe("j", 5)
e = [probe("k", 1) and probe("l", 2), probe("m", 0) or probe("n", 7)]
if probe("o", 0) or probe("p", 0):
    print("no")
elif probe("q", 1) and probe("r", 1):
    print("yes")
print(a, b, c, d, e)
print(calls)
