# Longest weighted path through a small call graph. Edges between the same
# pair of nodes may appear more than once with different weights.

edges = [
    ("Init", "Send", 2),
    ("Init", "Barrier", 1),
    ("Init", "Barrier", 5),
    ("Send", "Recv", 1),
    ("Recv", "Barrier", 1),
    ("Barrier", "Finalize", 1),
]


def build(edge_list):
    preds = {}
    for src, dst, w in edge_list:
        keyed = preds.setdefault(dst, {}).setdefault(src, {})
        keyed[len(keyed)] = w
    return preds


def topo_order(edge_list):
    nodes = []
    for src, dst, _ in edge_list:
        for node in (src, dst):
            if node not in nodes:
                nodes.append(node)
    indeg = {node: 0 for node in nodes}
    for _, dst, _ in edge_list:
        indeg[dst] += 1
    order = []
    ready = [node for node in nodes if indeg[node] == 0]
    while ready:
        node = ready.pop(0)
        order.append(node)
        for src, dst, _ in edge_list:
            if src == node:
                indeg[dst] -= 1
                if indeg[dst] == 0:
                    ready.append(dst)
    return order


def longest(edge_list):
    preds = build(edge_list)
    dist = {}
    for label in topo_order(edge_list):
        best = 0
        for pred, keyed in preds.get(label, {}).items():
            weight = keyed[0]
            path_weight = dist[pred] + weight
            if path_weight > best:
                best = path_weight
        dist[label] = best
    return dist


dist = longest(edges)
print(dist["Barrier"], dist["Finalize"])
