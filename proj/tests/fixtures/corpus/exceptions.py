class ValidationError(Exception):
    pass


def check(v):
    if v < 0:
        raise ValidationError("negative: %d" % v)
    return v * 2


def safe(v):
    try:
        return check(v)
    except ValidationError as e:
        print("caught", e)
        return None
    finally:
        print("checked", v)


results = []
for v in [3, -1, 5]:
    results.append(safe(v))
print(results)

try:
    for i in range(5):
        if i == 3:
            check(-i)
        print("loop", i)
except ValidationError as err:
    print("outer", err)


def deep(n):
    if n == 0:
        raise KeyError("bottom")
    return deep(n - 1)


try:
    deep(4)
except KeyError as k:
    print("deep", k)
print("after")
