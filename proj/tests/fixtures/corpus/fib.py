# Recursive Fibonacci; `val` is assigned once per non-base invocation.


def fib(n):
    if n <= 2:
        return 1
    val = fib(n - 1) + fib(n - 2)
    return val

print(fib(7))
