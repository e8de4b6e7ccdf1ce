# Gradient descent on (x - 3)^2 + 1 with a sensible training rate.


def gradient(x):
    return 2.0 * (x - 3.0)


def descend(x, rate, steps):
    for step in range(steps):
        g = gradient(x)
        x = x - rate * g
    return x


start = 0.5
final = descend(start, 0.1, 400)
print(final)
