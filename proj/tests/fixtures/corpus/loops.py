def weight(i):
    return (i * 7) % 5


total = 0
for i in range(10):
    if i == 7:
        break
    if i % 2 == 0:
        continue
    total += weight(i)
else:
    total = -1
print(total)

count = 0
n = 0
while n < 20:
    n += 3
    count += 1
else:
    count *= 10
print(count, n)

grid = []
for row in range(3):
    line = []
    for col in range(4):
        line.append(row * col)
    grid.append(line)
print(grid)

for idx, (a, b) in enumerate(zip("abc", [1, 2, 3])):
    print(idx, a, b)

for empty in []:
    print("never")
else:
    print("empty loop done")
