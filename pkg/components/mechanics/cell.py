"""
周期三角化壳体单胞 - 数据模型、生成器与文件读写

展示内容：
- 周期格子、节点、杆件与单胞的不可变数据类型
- 不变量校验（格子面积、基本域、杆长、重复杆、周期连通性）
- 参数化生成器：平面、单向波纹、随机高程、开孔、柄（双层+管）
- 单胞 JSON 文件读写与 OBJ 网格导出

所有周期性都由杆件的整数平移 shift 承载，节点坐标始终位于基本单胞内。
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from components.mechanics.errors import CellError
from utils.helpers import validate_json_schema

logger = logging.getLogger(__name__)

# 杆长下限相对于格子尺寸的比例
EPS_LEN_FACTOR = 1e-9

Shift = Tuple[int, int]
PathLike = Union[str, Path]


# ==================== 数据类型 ====================
@dataclass(frozen=True)
class Lattice:
    """二维周期格子，a1、a2 逆时针张成单胞"""

    a1: Tuple[float, float]
    a2: Tuple[float, float]

    @property
    def area(self) -> float:
        return self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0]

    @property
    def matrix(self) -> np.ndarray:
        """以 a1、a2 为列的 2×2 矩阵"""
        return np.array([[self.a1[0], self.a2[0]], [self.a1[1], self.a2[1]]], dtype=float)

    @property
    def size(self) -> float:
        return max(math.hypot(*self.a1), math.hypot(*self.a2))

    @property
    def eps_len(self) -> float:
        return EPS_LEN_FACTOR * self.size

    def shift_vector(self, shift: Shift) -> np.ndarray:
        """整数平移对应的三维向量（z 分量为零）"""
        return np.array(
            [
                shift[0] * self.a1[0] + shift[1] * self.a2[0],
                shift[0] * self.a1[1] + shift[1] * self.a2[1],
                0.0,
            ]
        )


@dataclass(frozen=True)
class Node:
    x: Tuple[float, float]
    z: float


@dataclass(frozen=True)
class Bar:
    """杆件：端点 j 位于平移 shift 的单胞副本中，k 为轴向刚度"""

    i: int
    j: int
    shift: Shift
    k: float

    def key(self) -> Tuple[int, int, int, int]:
        """与方向无关的标识，(i,j,s) 与 (j,i,-s) 视为同一根杆"""
        forward = (self.i, self.j, self.shift[0], self.shift[1])
        backward = (self.j, self.i, -self.shift[0], -self.shift[1])
        return min(forward, backward)


@dataclass(frozen=True)
class UnitCell:
    lattice: Lattice
    nodes: Tuple[Node, ...]
    bars: Tuple[Bar, ...]
    metadata: Dict[str, str] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_bars(self) -> int:
        return len(self.bars)

    def positions(self) -> np.ndarray:
        """(N, 3) 节点坐标"""
        return np.array([[n.x[0], n.x[1], n.z] for n in self.nodes], dtype=float).reshape(-1, 3)

    def elevations(self) -> np.ndarray:
        return np.array([n.z for n in self.nodes], dtype=float)

    def bar_index_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """返回 (i, j, shift) 数组"""
        i = np.array([b.i for b in self.bars], dtype=int)
        j = np.array([b.j for b in self.bars], dtype=int)
        s = np.array([b.shift for b in self.bars], dtype=int).reshape(-1, 2)
        return i, j, s

    def endpoint_positions(self) -> Tuple[np.ndarray, np.ndarray]:
        """杆件两端的实际坐标：p_i 与平移后的 q_j"""
        pos = self.positions()
        i, j, s = self.bar_index_arrays()
        offsets = s @ self.lattice.matrix.T
        q = pos[j].copy()
        q[:, :2] += offsets
        return pos[i], q

    def bar_vectors(self) -> np.ndarray:
        p, q = self.endpoint_positions()
        return q - p

    def bar_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.bar_vectors(), axis=1)

    def stiffnesses(self) -> np.ndarray:
        return np.array([b.k for b in self.bars], dtype=float)

    def moduli(self) -> np.ndarray:
        """截面模量 c_b = k_b·L_b，改变高程时保持不变"""
        return self.stiffnesses() * self.bar_lengths()

    def with_elevations(self, z: Sequence[float]) -> "UnitCell":
        """替换节点高程，并按 k_b = c_b / L_b 更新杆件刚度"""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n_nodes,):
            raise ValueError(f"expected {self.n_nodes} elevations, got shape {z.shape}")
        moduli = self.moduli()
        nodes = tuple(Node(n.x, float(zi)) for n, zi in zip(self.nodes, z))
        moved = replace(self, nodes=nodes)
        lengths = moved.bar_lengths()
        bars = tuple(
            Bar(b.i, b.j, b.shift, float(c / L) if L > 0 else math.inf)
            for b, c, L in zip(self.bars, moduli, lengths)
        )
        return replace(moved, bars=bars)

    def with_stiffness_scaled(self, factor: float) -> "UnitCell":
        if factor <= 0:
            raise ValueError("stiffness factor must be positive")
        bars = tuple(Bar(b.i, b.j, b.shift, b.k * factor) for b in self.bars)
        return replace(self, bars=bars)

    def summary(self) -> str:
        return f"nodes={self.n_nodes} bars={self.n_bars} area={self.lattice.area:g}"


# ==================== 不变量校验 ====================
def _lattice_index(vectors: Iterable[Shift]) -> int:
    """整数向量生成的子格在 Z² 中的指数；秩不足时返回 0"""
    a, b, d = 0, 0, 0
    for x, y in vectors:
        r1, v = (a, b), (int(x), int(y))
        while v[0] != 0:
            q = r1[0] // v[0]
            r1, v = v, (r1[0] - q * v[0], r1[1] - q * v[1])
        a, b = r1
        d = math.gcd(d, v[1])
    return abs(a) * d


def _degrees(n_nodes: int, bars: Sequence[Bar]) -> np.ndarray:
    deg = np.zeros(n_nodes, dtype=int)
    for bar in bars:
        deg[bar.i] += 1
        deg[bar.j] += 1
    return deg


def is_periodically_connected(n_nodes: int, bars: Sequence[Bar]) -> bool:
    """周期铺排后的杆件图是否连通

    商图连通，且所有圈的平移向量生成整个 Z²。
    """
    if n_nodes == 0:
        return False
    rows = [b.i for b in bars]
    cols = [b.j for b in bars]
    graph = coo_matrix((np.ones(len(bars)), (rows, cols)), shape=(n_nodes, n_nodes))
    n_components, _ = connected_components(graph, directed=False)
    if n_components != 1:
        return False

    adjacency: List[List[Tuple[int, Shift]]] = [[] for _ in range(n_nodes)]
    for b in bars:
        adjacency[b.i].append((b.j, b.shift))
        adjacency[b.j].append((b.i, (-b.shift[0], -b.shift[1])))

    # 生成树上的平移势
    potential: List[Optional[Shift]] = [None] * n_nodes
    potential[0] = (0, 0)
    stack = [0]
    while stack:
        n = stack.pop()
        pn = potential[n]
        for m, s in adjacency[n]:
            if potential[m] is None:
                potential[m] = (pn[0] + s[0], pn[1] + s[1])
                stack.append(m)

    cycles = []
    for b in bars:
        pi, pj = potential[b.i], potential[b.j]
        cycles.append((pi[0] + b.shift[0] - pj[0], pi[1] + b.shift[1] - pj[1]))
    return _lattice_index(cycles) == 1


def validate_cell(cell: UnitCell) -> None:
    """按顺序检查不变量，遇到第一个违反项即抛出 CellError"""
    lattice = cell.lattice
    area = lattice.area
    if not np.isfinite(area) or area <= 0:
        raise CellError("degenerate lattice", f"area={area!r}")

    n = cell.n_nodes
    if n == 0:
        raise CellError("isolated node", "cell has no nodes")
    inv = np.linalg.inv(lattice.matrix)
    for idx, node in enumerate(cell.nodes):
        s, t = inv @ np.asarray(node.x, dtype=float)
        if not (-1e-12 <= s < 1.0 and -1e-12 <= t < 1.0) or not np.isfinite(node.z):
            raise CellError("node outside base cell", f"node {idx} at fractional ({s:.6g}, {t:.6g})")

    seen: Set[Tuple[int, int, int, int]] = set()
    for idx, bar in enumerate(cell.bars):
        if not (0 <= bar.i < n and 0 <= bar.j < n):
            raise CellError("bar index out of range", f"bar {idx}")
        if bar.i == bar.j and tuple(bar.shift) == (0, 0):
            raise CellError("self-loop bar", f"bar {idx}")
        if not (np.isfinite(bar.k) and bar.k > 0):
            raise CellError("nonpositive stiffness", f"bar {idx} k={bar.k!r}")
        key = bar.key()
        if key in seen:
            raise CellError("duplicate bar", f"bar {idx} ({bar.i}, {bar.j}, {tuple(bar.shift)})")
        seen.add(key)

    lengths = cell.bar_lengths()
    short = np.flatnonzero(lengths <= lattice.eps_len)
    if short.size:
        raise CellError("degenerate bar", f"bar {int(short[0])} length={lengths[short[0]]:.3e}")

    deg = _degrees(n, cell.bars)
    isolated = np.flatnonzero(deg == 0)
    if isolated.size:
        raise CellError("isolated node", f"node {int(isolated[0])}")
    low = np.flatnonzero(deg < 3)
    if low.size:
        logger.warning("nodes with degree < 3: %s", low.tolist())

    if not is_periodically_connected(n, cell.bars):
        raise CellError("disconnected cell")


# ==================== 三角面与拓扑计数 ====================
Vertex = Tuple[int, Shift]
Triangle = Tuple[Vertex, Vertex, Vertex]


def _canonical_triangle(verts: Sequence[Vertex]) -> Tuple[Vertex, ...]:
    best = None
    for _, anchor in verts:
        moved = tuple(sorted((n, (s[0] - anchor[0], s[1] - anchor[1])) for n, s in verts))
        if best is None or moved < best:
            best = moved
    return best


def triangles(cell: UnitCell) -> List[Triangle]:
    """铺排曲面上的三角面：平移总和为零的 3-圈，按格子平移去重

    每个三角面按 xy 投影逆时针定向（投影退化时保持枚举顺序）。
    """
    nbrs: List[Set[Tuple[int, Shift]]] = [set() for _ in range(cell.n_nodes)]
    for b in cell.bars:
        s = (int(b.shift[0]), int(b.shift[1]))
        nbrs[b.i].add((b.j, s))
        nbrs[b.j].add((b.i, (-s[0], -s[1])))

    pos = cell.positions()
    found: Dict[Tuple[Vertex, ...], Triangle] = {}
    for a in range(cell.n_nodes):
        for b, sab in sorted(nbrs[a]):
            for c, sbc in sorted(nbrs[b]):
                sac = (sab[0] + sbc[0], sab[1] + sbc[1])
                if (c, sac) not in nbrs[a]:
                    continue
                verts = [(a, (0, 0)), (b, sab), (c, sac)]
                if len(set(verts)) < 3:
                    continue
                key = _canonical_triangle(verts)
                if key in found:
                    continue
                tri = list(key)
                xy = [pos[n, :2] + cell.lattice.shift_vector(s)[:2] for n, s in tri]
                cross = (xy[1][0] - xy[0][0]) * (xy[2][1] - xy[0][1]) - (xy[1][1] - xy[0][1]) * (
                    xy[2][0] - xy[0][0]
                )
                if cross < 0:
                    tri[1], tri[2] = tri[2], tri[1]
                found[key] = (tri[0], tri[1], tri[2])
    return [found[k] for k in sorted(found)]


def euler_characteristic(cell: UnitCell) -> int:
    """单胞的 V − E + F（环面三角化为 0）"""
    return cell.n_nodes - cell.n_bars + len(triangles(cell))


# ==================== 生成器 ====================
class _CellBuilder:
    """在分数坐标下搭建单胞，自动把节点折回基本域并记录平移"""

    def __init__(self, lattice: Lattice):
        self.lattice = lattice
        self.nodes: List[Node] = []
        self.offsets: List[Shift] = []
        self.pairs: List[Tuple[int, int, Shift]] = []

    @staticmethod
    def _wrap(f: float) -> Tuple[float, int]:
        off = math.floor(f)
        base = f - off
        if base >= 1.0:
            base -= 1.0
            off += 1
        return base, off

    def add_node(self, s: float, t: float, z: float) -> int:
        bs, os_ = self._wrap(s)
        bt, ot = self._wrap(t)
        x = self.lattice.matrix @ np.array([bs, bt])
        self.nodes.append(Node((float(x[0]), float(x[1])), float(z)))
        self.offsets.append((os_, ot))
        return len(self.nodes) - 1

    def add_bar(self, a: int, b: int, extra: Shift = (0, 0)) -> None:
        """连接节点 a 与节点 b（b 另加整数平移 extra）"""
        oa, ob = self.offsets[a], self.offsets[b]
        shift = (ob[0] + extra[0] - oa[0], ob[1] + extra[1] - oa[1])
        self.pairs.append((a, b, shift))

    def build(self, metadata: Dict[str, str]) -> UnitCell:
        cell = UnitCell(self.lattice, tuple(self.nodes), tuple(), dict(metadata))
        pos = cell.positions()
        bars = []
        for a, b, shift in self.pairs:
            L = float(np.linalg.norm(pos[b] + self.lattice.shift_vector(shift) - pos[a]))
            bars.append(Bar(a, b, shift, 1.0 / L if L > 0 else math.inf))
        cell = replace(cell, bars=tuple(bars))
        validate_cell(cell)
        logger.debug("built %s cell: %s", metadata.get("generator", "?"), cell.summary())
        return cell


UNIT_LATTICE = Lattice((1.0, 0.0), (0.0, 1.0))


def _grid(builder: _CellBuilder, nx: int, ny: int, z: np.ndarray, skip_square: Optional[Tuple[int, int]] = None) -> List[int]:
    """nx×ny 网格层，按列交替对角线；返回节点编号（行优先，i 最快）"""
    ids = [builder.add_node(i / nx, j / ny, z[j * nx + i]) for j in range(ny) for i in range(nx)]

    def ref(i: int, j: int) -> Tuple[int, Shift]:
        return ids[(j % ny) * nx + (i % nx)], (i // nx, j // ny)

    def connect(p: Tuple[int, int], q: Tuple[int, int]) -> None:
        (a, sa), (b, sb) = ref(*p), ref(*q)
        builder.add_bar(a, b, (sb[0] - sa[0], sb[1] - sa[1]))

    for j in range(ny):
        for i in range(nx):
            connect((i, j), (i + 1, j))
            connect((i, j), (i, j + 1))
            if skip_square == (i, j):
                continue
            if i % 2 == 0:
                connect((i, j), (i + 1, j + 1))
            else:
                connect((i + 1, j), (i, j + 1))
    return ids


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


def generate_flat(nx: int, ny: int) -> UnitCell:
    """z = 0 的 nx×ny 平面网格"""
    _require(nx >= 1 and ny >= 1, "nx and ny must be >= 1")
    builder = _CellBuilder(UNIT_LATTICE)
    _grid(builder, nx, ny, np.zeros(nx * ny))
    return builder.build({"generator": "flat", "nx": str(nx), "ny": str(ny)})


def generate_corrugation(nx: int, ny: int, h: float) -> UnitCell:
    """单向波纹 z = h·cos(2π x1 / |a1|)，与 x2 无关

    列交替对角线在 nx 为偶数时关于波峰镜像对称。
    """
    _require(nx >= 2 and ny >= 1, "corrugation needs nx >= 2 and ny >= 1")
    _require(h >= 0, "amplitude h must be nonnegative")
    if nx % 2:
        logger.warning("odd nx=%d breaks the crest mirror symmetry of the triangulation", nx)
    profile = h * np.cos(2.0 * np.pi * np.arange(nx) / nx)
    builder = _CellBuilder(UNIT_LATTICE)
    _grid(builder, nx, ny, np.tile(profile, ny))
    return builder.build({"generator": "corrugation", "nx": str(nx), "ny": str(ny), "h": str(float(h))})


def generate_random(nx: int, ny: int, h: float, seed: int) -> UnitCell:
    """高程在 [−h, h] 上独立均匀分布的网格，给定种子时确定"""
    _require(nx >= 2 and ny >= 2, "random cells need nx, ny >= 2")
    _require(h >= 0, "amplitude h must be nonnegative")
    rng = np.random.default_rng(seed)
    z = rng.uniform(-h, h, size=nx * ny) if h > 0 else np.zeros(nx * ny)
    builder = _CellBuilder(UNIT_LATTICE)
    _grid(builder, nx, ny, z)
    return builder.build(
        {"generator": "random", "nx": str(nx), "ny": str(ny), "h": str(float(h)), "seed": str(seed)}
    )


def punch_hole(cell: UnitCell, node_ids: Iterable[int]) -> UnitCell:
    """删除给定节点及其关联杆件，重新压缩编号"""
    removed = sorted({int(n) for n in node_ids})
    _require(len(removed) > 0, "node_ids must be nonempty")
    _require(all(0 <= n < cell.n_nodes for n in removed), "node id out of range")
    _require(len(removed) < cell.n_nodes, "cannot remove every node")

    dropped = set(removed)
    keep = [n for n in range(cell.n_nodes) if n not in dropped]
    renumber = {old: new for new, old in enumerate(keep)}
    bars = tuple(
        Bar(renumber[b.i], renumber[b.j], b.shift, b.k)
        for b in cell.bars
        if b.i not in dropped and b.j not in dropped
    )
    nodes = tuple(cell.nodes[n] for n in keep)
    if not is_periodically_connected(len(nodes), bars) or np.any(_degrees(len(nodes), bars) == 0):
        raise CellError("cell disconnected by hole", f"removed nodes {removed}")

    metadata = dict(cell.metadata)
    previous = metadata.get("hole")
    metadata["hole"] = ",".join(str(n) for n in removed) if not previous else f"{previous};{','.join(map(str, removed))}"
    holed = UnitCell(cell.lattice, nodes, bars, metadata)
    validate_cell(holed)
    metadata = dict(metadata, euler_characteristic=str(euler_characteristic(holed)))
    return replace(holed, metadata=metadata)


def generate_handle(nx: int, ny: int, gap: float, tube: float) -> UnitCell:
    """两层平面网格（z = 0 与 z = gap）经每胞一根三角化方管相连

    方管两端为两层的网格方格 (0, 0)，中间环边长为 tube、位于 z = gap / 2。
    """
    _require(nx >= 2 and ny >= 2, "handle cells need nx, ny >= 2")
    _require(gap > 0, "gap must be positive")
    lattice = UNIT_LATTICE
    if not (0 < tube < min(math.hypot(*lattice.a1), math.hypot(*lattice.a2))):
        raise CellError("tube size exceeding cell", f"tube={tube!r}")

    builder = _CellBuilder(lattice)
    n = nx * ny
    bottom = _grid(builder, nx, ny, np.zeros(n), skip_square=(0, 0))
    top = _grid(builder, nx, ny, np.full(n, float(gap)), skip_square=(0, 0))

    corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    ring_bottom = [bottom[j * nx + i] for i, j in corners]
    ring_top = [top[j * nx + i] for i, j in corners]
    cx, cy = 0.5 / nx, 0.5 / ny
    half = 0.5 * tube
    ring_mid = [
        builder.add_node(cx + sx * half, cy + sy * half, 0.5 * gap)
        for sx, sy in [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    ]

    for k in range(4):
        nxt = (k + 1) % 4
        builder.add_bar(ring_bottom[k], ring_mid[k])
        builder.add_bar(ring_bottom[k], ring_mid[nxt])
        builder.add_bar(ring_mid[k], ring_mid[nxt])
        builder.add_bar(ring_mid[k], ring_top[k])
        builder.add_bar(ring_mid[k], ring_top[nxt])

    cell = builder.build(
        {"generator": "handle", "nx": str(nx), "ny": str(ny), "gap": str(float(gap)), "tube": str(float(tube))}
    )
    metadata = dict(cell.metadata, euler_characteristic=str(euler_characteristic(cell)))
    return replace(cell, metadata=metadata)


# ==================== 文件读写 ====================
def cell_to_dict(cell: UnitCell) -> dict:
    return {
        "lattice": {"a1": list(cell.lattice.a1), "a2": list(cell.lattice.a2)},
        "nodes": [{"x": list(n.x), "z": n.z} for n in cell.nodes],
        "bars": [{"i": b.i, "j": b.j, "shift": list(b.shift), "k": b.k} for b in cell.bars],
        "metadata": dict(cell.metadata),
    }


def cell_from_dict(data: dict) -> UnitCell:
    ok, message = validate_json_schema(data, {"lattice": dict, "nodes": list, "bars": list})
    if not ok:
        raise CellError("malformed file", message)
    try:
        lat = data["lattice"]
        lattice = Lattice(
            (float(lat["a1"][0]), float(lat["a1"][1])),
            (float(lat["a2"][0]), float(lat["a2"][1])),
        )
        nodes = tuple(Node((float(n["x"][0]), float(n["x"][1])), float(n["z"])) for n in data["nodes"])
        bars = tuple(
            Bar(int(b["i"]), int(b["j"]), (int(b["shift"][0]), int(b["shift"][1])), float(b["k"]))
            for b in data["bars"]
        )
        metadata = {str(k): str(v) for k, v in data.get("metadata", {}).items()}
    except (KeyError, IndexError, TypeError, ValueError, AttributeError) as e:
        raise CellError("malformed file", str(e)) from e
    cell = UnitCell(lattice, nodes, bars, metadata)
    validate_cell(cell)
    return cell


def save_cell(cell: UnitCell, path: PathLike) -> None:
    Path(path).write_text(json.dumps(cell_to_dict(cell), indent=2) + "\n", encoding="utf-8")


def load_cell(path: PathLike) -> UnitCell:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CellError("malformed file", str(e)) from e
    if not isinstance(data, dict):
        raise CellError("malformed file", "top level must be an object")
    return cell_from_dict(data)


def export_obj(cell: UnitCell, tiles: Tuple[int, int], path: PathLike) -> Tuple[int, int]:
    """把 tiles[0]×tiles[1] 个单胞写成 OBJ 三角网格，返回 (顶点数, 面数)

    跨越铺排边界的面回绕到对侧顶点，保持顶点数 = 节点数 × 铺排数。
    """
    t1, t2 = int(tiles[0]), int(tiles[1])
    _require(t1 >= 1 and t2 >= 1, "tiles must be >= (1, 1)")
    n = cell.n_nodes
    pos = cell.positions()
    faces = triangles(cell)

    lines = [f"# {cell.metadata.get('generator', 'cell')} tiled {t1}x{t2}"]
    for b in range(t2):
        for a in range(t1):
            offset = cell.lattice.shift_vector((a, b))
            for p in pos + offset:
                lines.append("v " + " ".join(repr(float(c)) for c in p))

    def vertex_id(node: int, a: int, b: int) -> int:
        return (b % t2 * t1 + a % t1) * n + node + 1

    n_faces = 0
    for b in range(t2):
        for a in range(t1):
            for tri in faces:
                ids = [vertex_id(node, a + s[0], b + s[1]) for node, s in tri]
                lines.append("f " + " ".join(str(v) for v in ids))
                n_faces += 1
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return n * t1 * t2, n_faces
