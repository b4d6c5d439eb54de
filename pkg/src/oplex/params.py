"""Extract countable parameter records from a resolved schema tree.

A record is one leaf or leaf-list, together with the ordered list-node
ancestry that multiplies it when instance sizes are applied.  Choice and
case nodes contribute path segments but never records or ancestry.
"""

from __future__ import annotations

from dataclasses import dataclass

from .schema import SchemaKind, SchemaNode

LEAF = "leaf"
LEAF_LIST = "leaf-list"


@dataclass(frozen=True)
class ParameterRecord:
    """One countable parameter.

    ``path`` is the ``/``-joined segment path from the module root; a
    segment carries a ``module-name:`` prefix iff the node's origin module
    differs from the tree's target module.  ``list_ancestry`` holds the
    paths of the enclosing list nodes, outermost first; each entry is a
    strict prefix of ``path``.
    """

    path: str
    kind: str  # LEAF or LEAF_LIST
    list_ancestry: tuple[str, ...]
    module: str
    vendor: str
    config: bool

    def key(self) -> tuple[str, str, tuple[str, ...]]:
        """Identity used for cross-frontend multiset comparison."""
        return (self.path, self.kind, self.list_ancestry)

    def to_json(self) -> dict:
        return {
            "path": self.path,
            "kind": self.kind,
            "listAncestry": list(self.list_ancestry),
            "module": self.module,
            "vendor": self.vendor,
            "configFlag": self.config,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ParameterRecord":
        return cls(
            path=data["path"],
            kind=data["kind"],
            list_ancestry=tuple(data["listAncestry"]),
            module=data["module"],
            vendor=data["vendor"],
            config=data["configFlag"],
        )


def extract(root: SchemaNode, vendor: str) -> list[ParameterRecord]:
    """Emit one record per leaf and per leaf-list under ``root``.

    ``root`` must be a resolved module-root.  List key leaves are ordinary
    records (counted once).  Records are emitted in depth-first order.
    """
    target = root.origin_module
    records: list[ParameterRecord] = []

    def visit(node: SchemaNode, prefix: str, ancestry: tuple[str, ...]) -> None:
        for child in node.children:
            name = child.name
            if child.origin_module != target:
                name = f"{child.origin_module}:{name}"
            path = f"{prefix}/{name}" if prefix else name
            if child.kind in (SchemaKind.LEAF, SchemaKind.LEAF_LIST):
                kind = LEAF if child.kind is SchemaKind.LEAF else LEAF_LIST
                records.append(ParameterRecord(
                    path, kind, ancestry, child.origin_module, vendor,
                    child.config))
            elif child.kind is SchemaKind.LIST:
                visit(child, path, ancestry + (path,))
            else:
                visit(child, path, ancestry)

    visit(root, "", ())
    return records


def group_by_module(records: list[ParameterRecord],
                    all_modules: list[str] | None = None,
                    ) -> dict[str, list[ParameterRecord]]:
    """Group records by owning module.

    ``all_modules``, when given, seeds empty groups so that modules
    contributing no parameters (typedef- or grouping-only modules) still
    appear in the catalog.
    """
    groups: dict[str, list[ParameterRecord]] = {}
    for name in all_modules or []:
        groups[name] = []
    for record in records:
        groups.setdefault(record.module, []).append(record)
    return groups
