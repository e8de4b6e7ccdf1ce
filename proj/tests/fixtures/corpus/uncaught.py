def divide(a, b):
    return a / b


def run(values):
    out = []
    for v in values:
        out.append(divide(10, v))
        print("ok", out[-1])
    return out


run([1, 2, 0, 4])
