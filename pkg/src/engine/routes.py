"""
Candidate route enumeration (loop-free k shortest paths through the core)
"""

import logging
from itertools import islice
from typing import List

import networkx as nx

from ..models.network import NetworkGraph
from ..models.schedule import Route
from ..models.traffic import Application
from ..utils.errors import ConfigurationError, RouteError

logger = logging.getLogger(__name__)

# Simple paths inspected per requested route before giving up on finding more
SCAN_FACTOR = 20


def enumerate_routes(graph: NetworkGraph, app: Application, k: int) -> List[Route]:
    """Up to k conforming routes ordered by hop count, total delay, then node ids"""
    if k < 1:
        raise ConfigurationError('k must be at least 1')
    for end in (app.src, app.dest):
        if end not in graph.nodes:
            raise ConfigurationError(f"application {app.id!r} references unknown node {end!r}")

    # hosts never forward, so only the two endpoints may appear
    view = nx.subgraph_view(
        graph.digraph,
        filter_node=lambda v: v in (app.src, app.dest) or not graph.kind(v).is_host,
    )
    candidates = []
    try:
        for nodes in islice(nx.shortest_simple_paths(view, app.src, app.dest), SCAN_FACTOR * k):
            if candidates and len(candidates) >= k and len(nodes) > len(candidates[k - 1][0]):
                break
            try:
                route = Route.from_nodes(nodes, graph)
            except RouteError:
                continue
            delay = sum(link.delay_ns for link in route.links(graph))
            candidates.append((route.nodes, delay, route))
            candidates.sort(key=lambda c: (len(c[0]), c[1], c[0]))
    except nx.NetworkXNoPath:
        logger.debug("no path from %s to %s", app.src, app.dest)
        return []

    routes = [c[2] for c in candidates[:k]]
    logger.debug("application %s: %d candidate routes", app.id, len(routes))
    return routes
