import numpy as np


def matmul(a, b):
    rows, inner, cols = len(a), len(b), len(b[0])
    return [[sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols)] for i in range(rows)]


def transpose(m):
    return [list(row) for row in zip(*m)]


a = [[1, 2], [3, 4], [5, 6]]
b = [[7, 8, 9], [10, 11, 12]]
prod = matmul(a, b)
print(prod)
print(transpose(prod))
arr = np.array(prod)
print(int(np.sum(arr)), arr.shape, float(np.linalg.norm(np.array([3.0, 4.0]))))
