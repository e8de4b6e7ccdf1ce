import math
import random

random.seed(7)


def segments_cross(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return d1 * d2 < 0 and d3 * d4 < 0


def angle_between(p1, p2, p3, p4):
    ax, ay = p2[0] - p1[0], p2[1] - p1[1]
    bx, by = p4[0] - p3[0], p4[1] - p3[1]
    cosv = abs(ax * bx + ay * by) / (math.hypot(ax, ay) * math.hypot(bx, by))
    return math.degrees(math.acos(min(1.0, cosv)))


def evaluate(pos, graph_edges):
    intersections = 0
    min_angle = 90.0
    for i in range(len(graph_edges)):
        for j in range(i + 1, len(graph_edges)):
            a, b = graph_edges[i]
            c, d = graph_edges[j]
            if len({a, b, c, d}) < 4:
                continue
            if segments_cross(pos[a], pos[b], pos[c], pos[d]):
                intersections += 1
                min_angle = min(min_angle, angle_between(pos[a], pos[b], pos[c], pos[d]))
    return intersections, min_angle


def descend(pos, graph_edges, steps):
    for step in range(steps):
        intersections, min_angle = evaluate(pos, graph_edges)
        node = step % len(pos)
        trial = list(pos)
        trial[node] = (pos[node][0] + random.uniform(-0.5, 0.5), pos[node][1] + random.uniform(-0.5, 0.5))
        t_inter, t_angle = evaluate(trial, graph_edges)
        if t_inter < intersections or (t_inter == intersections and t_angle > min_angle):
            pos = trial
    return pos


graph_edges = [(0, 2), (1, 3), (0, 3), (1, 2), (2, 4), (3, 4), (0, 4)]
pos = [(random.random(), random.random()) for _ in range(5)]
pos = descend(pos, graph_edges, 30)
print(evaluate(pos, graph_edges)[0])
