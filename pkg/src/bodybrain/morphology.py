"""Development of module trees from body genotypes.

A robot is a tree of modules on an integer 3D grid: one core, plus bricks
and active hinges. Construction is breadth-first from the core. Each open
attachment socket names a candidate grid slot; the CPPN is queried with
(x, y, z, tree distance to core) and its argmaxes decide what, if
anything, grows there and at which rotation. Occupied slots close the
branch, and construction halts once the module budget is spent.

Socket geometry: the core exposes four horizontal sockets (front, left,
right, back), bricks expose all but the side facing their parent, and an
active hinge exposes a single distal socket. A module rotated by 90
degrees has its frame turned about the attachment axis, which steers the
sockets of its descendants out of the horizontal plane.

The core's grid column (x, y) = (0, 0) is reserved at every z level, not
just at the origin. This guarantees that every joint occupies a cell the
brain matrix can address, since the matrix has no row for the centre.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

CORE = "core"
BRICK = "brick"
HINGE = "hinge"

FRONT, LEFT, RIGHT, BACK = 0, 1, 2, 3

_LOCAL_DIR = {
    FRONT: np.array([0, 1, 0]),
    LEFT: np.array([-1, 0, 0]),
    RIGHT: np.array([1, 0, 0]),
    BACK: np.array([0, -1, 0]),
}

_I3 = np.eye(3, dtype=int)
_RZ90 = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]])
_RZ180 = _RZ90 @ _RZ90
_RZ270 = _RZ180 @ _RZ90
_RY90 = np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0]])

# Rotation that maps a child's local frame into the parent-local socket
# frame; the child's +y axis ends up pointing along the socket direction.
_SOCKET_ROT = {FRONT: _I3, LEFT: _RZ90, RIGHT: _RZ270, BACK: _RZ180}

_SOCKETS = {
    CORE: (FRONT, LEFT, RIGHT, BACK),
    BRICK: (FRONT, LEFT, RIGHT),
    HINGE: (FRONT,),
}

_KIND_BY_OUTPUT = (BRICK, HINGE, None)
_ROTATION_BY_OUTPUT = (0, 90)

MAX_MODULES = 10


@dataclass
class Module:
    index: int
    kind: str
    rotation: int
    position: tuple
    parent: int | None
    socket: int | None
    orientation: np.ndarray
    depth: int


class ModuleTree:
    """A developed robot body; modules are stored in placement order."""

    def __init__(self):
        core = Module(0, CORE, 0, (0, 0, 0), None, None, _I3.copy(), 0)
        self.modules = [core]
        self._occupied = {(0, 0, 0)}

    def __len__(self):
        return len(self.modules)

    def occupied(self, position) -> bool:
        return tuple(position) in self._occupied

    def attach(self, parent: int, socket: int, kind: str, rotation: int) -> int:
        """Place a module on an open socket; returns the new module index."""
        if kind not in (BRICK, HINGE):
            raise ValueError(f"cannot attach module kind {kind!r}")
        p = self.modules[parent]
        if socket not in _SOCKETS[p.kind]:
            raise ValueError(f"module kind {p.kind!r} has no socket {socket}")
        if any(m.parent == parent and m.socket == socket for m in self.modules):
            raise ValueError("socket already holds a child")
        direction = p.orientation @ _LOCAL_DIR[socket]
        position = tuple(np.asarray(p.position) + direction)
        if position in self._occupied:
            raise ValueError(f"grid slot {position} already occupied")
        orient = p.orientation @ _SOCKET_ROT[socket]
        if rotation == 90:
            orient = orient @ _RY90
        elif rotation != 0:
            raise ValueError("rotation must be 0 or 90")
        module = Module(len(self.modules), kind, rotation, position,
                        parent, socket, orient, p.depth + 1)
        self.modules.append(module)
        self._occupied.add(position)
        return module.index

    def children(self, index: int) -> list:
        kids = [m for m in self.modules if m.parent == index]
        kids.sort(key=lambda m: m.socket)
        return kids

    def grid2(self, index: int) -> tuple:
        x, y, _ = self.modules[index].position
        return (int(x), int(y))

    def hinges(self) -> list:
        return [m.index for m in self.modules if m.kind == HINGE]

    def to_nested(self) -> list:
        """Nested-list form [kind, rotation, [children...]], socket order."""

        def render(idx: int) -> list:
            m = self.modules[idx]
            return [m.kind, m.rotation, [render(c.index) for c in self.children(idx)]]

        return render(0)

    def to_obj(self) -> list:
        return [
            [m.index, m.kind, m.rotation, list(map(int, m.position)), m.parent, m.socket]
            for m in self.modules
        ]


def tree_distance(tree: ModuleTree, i: int, j: int) -> int:
    """Number of edges on the unique path between modules i and j."""
    a, b = tree.modules[i], tree.modules[j]
    dist = 0
    while a.index != b.index:
        if a.depth >= b.depth:
            a = tree.modules[a.parent]
        else:
            b = tree.modules[b.parent]
        dist += 1
    return dist


def develop_body(body, max_modules: int = MAX_MODULES) -> ModuleTree:
    """Decode a body genotype into a module tree, breadth first.

    body is anything exposing query(x, y, z, dist) -> five scores. Slot
    decisions take the argmax over the first three scores (brick, joint,
    empty) and over the last two (0 or 90 degrees); ties resolve to the
    earlier output.
    """
    tree = ModuleTree()
    queue = deque((0, s) for s in _SOCKETS[CORE])
    while queue and len(tree) < max_modules:
        parent_idx, socket = queue.popleft()
        parent = tree.modules[parent_idx]
        direction = parent.orientation @ _LOCAL_DIR[socket]
        position = tuple(np.asarray(parent.position) + direction)
        if position in tree._occupied:
            continue
        if position[0] == 0 and position[1] == 0:
            continue
        scores = body.query(position[0], position[1], position[2], parent.depth + 1)
        kind = _KIND_BY_OUTPUT[int(np.argmax(scores[:3]))]
        if kind is None:
            continue
        rotation = _ROTATION_BY_OUTPUT[int(np.argmax(scores[3:5]))]
        idx = tree.attach(parent_idx, socket, kind, rotation)
        queue.extend((idx, s) for s in _SOCKETS[kind])
    return tree
