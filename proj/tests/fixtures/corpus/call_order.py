log = []


def h():
    log.append("h")
    return 1


def g(v):
    log.append("g")
    return v + 1


def f(v):
    log.append("f")
    return v * 10


result = f(g(h()))
print(result)
print(",".join(log))
