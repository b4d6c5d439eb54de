"""Parse RFC 8340 tree-diagram text into parameter records.

This is the second frontend: the same record stream as the native
YANG pipeline, but recovered from the human-readable tree output of
standard YANG tooling.  Having two independent routes to the same
records lets the pipelines cross-check each other module by module.

A single diagram is self-contained for everything except cross-module
``augment`` sections, whose target lists live in another module's tree.
:class:`TreeCorpus` resolves those across a set of diagrams the same way
the native resolver does; a lone diagram skips such sections with a
warning, which mirrors what the native pipeline produces when the target
module is absent from its module set.
"""

from __future__ import annotations

import copy
import enum
import re
from dataclasses import dataclass, field

from .errors import SourceError
from .params import ParameterRecord, extract, group_by_module
from .schema import SchemaKind, SchemaNode


class MalformedTreeLine(SourceError):
    """A line does not follow RFC 8340 drawing conventions."""


class EmptyDiagram(SourceError):
    """The diagram contains no schema nodes at all."""


class NodeMarker(enum.Enum):
    CONTAINER = "container"
    LIST = "list"
    LEAF = "leaf"
    LEAF_LIST = "leaf-list"
    CHOICE = "choice"
    CASE = "case"
    OTHER = "other"


@dataclass
class TreeLine:
    """One lexed node line of a tree diagram."""

    depth: int
    flags: str
    name: str
    marker: NodeMarker
    type_text: str
    raw_text: str
    line_no: int


_NODE_RE = re.compile(r"^(?P<indent>[ |]*)\+--(?P<flags>rw|ro|-x|-n|-w|-u|mp|:)"
                      r"(?P<rest>.*)$")

#: Flags that start a non-data subtree (rpc/action, notification, rpc
#: input parameters, unexpanded uses, mount points).
_SKIP_FLAGS = frozenset({"-x", "-n", "-w", "-u", "mp"})

_OPAQUE_TYPES = ("<anydata>", "<anyxml>")


@dataclass
class _Section:
    kind: str  # "main" | "augment" | "ignored"
    target_path: str = ""
    nodes: list[SchemaNode] = field(default_factory=list)


@dataclass
class TreeDocument:
    """Parsed form of one module's tree diagram."""

    module: str
    root: SchemaNode
    augments: list[tuple[str, list[SchemaNode]]]
    warnings: list[str] = field(default_factory=list)


def _parse_node_line(line: str, line_no: int, file_name: str,
                     base_indent: int | None) -> tuple[TreeLine, int]:
    match = _NODE_RE.match(line)
    if match is None:
        raise MalformedTreeLine("node marker not recognized", file_name,
                                line_no)
    indent = len(match["indent"])
    if base_indent is None:
        base_indent = indent
    offset = indent - base_indent
    if offset < 0 or offset % 3 != 0:
        raise MalformedTreeLine(
            f"indentation of {indent} does not sit on the 3-column grid",
            file_name, line_no)
    depth = offset // 3
    flags = match["flags"]
    rest = match["rest"]

    if flags == ":":
        # Case line: "+--:(case-name)"
        case = re.match(r"^\((?P<name>[^)]+)\)\s*$", rest)
        if case is None:
            raise MalformedTreeLine("malformed case line", file_name, line_no)
        tree_line = TreeLine(depth, "", case["name"], NodeMarker.CASE, "",
                             line, line_no)
        return tree_line, base_indent

    if not rest.startswith(" "):
        raise MalformedTreeLine("missing space after node flags", file_name,
                                line_no)
    body = rest[1:]
    parts = body.split(None, 1)
    if not parts:
        raise MalformedTreeLine("node line has no name", file_name, line_no)
    name_token = parts[0]
    type_text = parts[1].strip() if len(parts) > 1 else ""

    if flags in _SKIP_FLAGS:
        tree_line = TreeLine(depth, flags, name_token, NodeMarker.OTHER,
                             type_text, line, line_no)
        return tree_line, base_indent

    choice = re.match(r"^\((?P<name>[^)]+)\)\??$", name_token)
    if choice is not None:
        tree_line = TreeLine(depth, flags, choice["name"], NodeMarker.CHOICE,
                             "", line, line_no)
        return tree_line, base_indent

    starred = False
    name = name_token
    while name and name[-1] in "*?!":
        if name[-1] == "*":
            starred = True
        name = name[:-1]
    if not name:
        raise MalformedTreeLine("node line has an empty name", file_name,
                                line_no)

    if type_text.startswith("["):
        # Key bracket of a list; everything after it is noise.
        if not starred:
            raise MalformedTreeLine(
                "key bracket on a node without a '*' marker", file_name,
                line_no)
        marker = NodeMarker.LIST
        type_text = ""
    elif starred:
        marker = NodeMarker.LEAF_LIST if type_text else NodeMarker.LIST
    elif type_text:
        marker = NodeMarker.LEAF
    else:
        marker = NodeMarker.CONTAINER

    tree_line = TreeLine(depth, flags, name, marker, type_text, line, line_no)
    return tree_line, base_indent


def parse_tree_document(text: str, module_name: str,
                        file_name: str = "<tree>") -> TreeDocument:
    """Parse one diagram into its own tree plus raw augment sections."""
    warnings: list[str] = []
    root = SchemaNode(SchemaKind.MODULE_ROOT, module_name, module_name)
    sections: list[_Section] = []
    current: _Section | None = None
    # parent stack: (depth, node); skip_depth marks a pruned subtree.
    stack: list[tuple[int, SchemaNode]] = []
    lines_by_depth: dict[int, TreeLine] = {}
    base_indent: int | None = None
    skip_depth: int | None = None
    last_line: TreeLine | None = None
    saw_nodes = False

    def open_section(section: _Section) -> None:
        nonlocal current, stack, base_indent, skip_depth, last_line
        current = section
        sections.append(section)
        stack = []
        lines_by_depth.clear()
        base_indent = None
        skip_depth = None
        last_line = None

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.rstrip()
        if not line.strip():
            continue
        if "+--" in line:
            if current is None:
                raise MalformedTreeLine("node line before any section header",
                                        file_name, line_no)
            if current.kind == "ignored":
                continue
            saw_nodes = True
            tree_line, base_indent = _parse_node_line(line, line_no,
                                                      file_name, base_indent)
            if skip_depth is not None:
                if tree_line.depth > skip_depth:
                    continue
                skip_depth = None
            if tree_line.marker is NodeMarker.OTHER:
                skip_depth = tree_line.depth
                last_line = None
                continue
            if tree_line.type_text in _OPAQUE_TYPES:
                warnings.append(
                    f"{module_name}: {tree_line.type_text} node "
                    f"'{tree_line.name}' treated as an opaque "
                    "zero-parameter node (line %d)" % line_no)
                skip_depth = tree_line.depth
                last_line = None
                continue
            _attach(current, stack, tree_line, root, module_name, file_name,
                    warnings)
            lines_by_depth[tree_line.depth] = tree_line
            last_line = tree_line
            continue
        stripped = line.strip()
        header = _match_header(stripped)
        if header is not None:
            kind, value = header
            if kind == "module":
                if value != module_name:
                    warnings.append(
                        f"diagram declares module '{value}' but was "
                        f"registered as '{module_name}'")
                open_section(_Section("main"))
            elif kind == "augment":
                open_section(_Section("augment", target_path=value))
            else:
                open_section(_Section("ignored"))
            continue
        # No marker and no header: a wrapped continuation of the
        # previous node line (long type or leafref target).
        if last_line is None:
            raise MalformedTreeLine("unrecognized line", file_name, line_no)
        last_line.type_text = (last_line.type_text + " " + stripped).strip()
        continue

    if not saw_nodes:
        raise EmptyDiagram("diagram contains no schema nodes", file_name)

    augments = [(s.target_path, s.nodes) for s in sections
                if s.kind == "augment"]
    return TreeDocument(module_name, root, augments, warnings)


def _match_header(stripped: str) -> tuple[str, str] | None:
    if stripped.startswith("module:"):
        return "module", stripped.split(":", 1)[1].strip()
    if stripped.startswith("submodule:"):
        return "module", stripped.split(":", 1)[1].split()[0].strip()
    if stripped.startswith("augment ") and stripped.endswith(":"):
        return "augment", stripped[len("augment "):-1].strip()
    if stripped in ("rpcs:", "notifications:"):
        return "ignored", ""
    if stripped.startswith("grouping ") and stripped.endswith(":"):
        return "ignored", ""
    return None


_MARKER_TO_KIND = {
    NodeMarker.CONTAINER: SchemaKind.CONTAINER,
    NodeMarker.LIST: SchemaKind.LIST,
    NodeMarker.LEAF: SchemaKind.LEAF,
    NodeMarker.LEAF_LIST: SchemaKind.LEAF_LIST,
    NodeMarker.CHOICE: SchemaKind.CHOICE,
    NodeMarker.CASE: SchemaKind.CASE,
}


def _attach(section: _Section, stack: list[tuple[int, SchemaNode]],
            tree_line: TreeLine, root: SchemaNode, module_name: str,
            file_name: str, warnings: list[str]) -> None:
    while stack and stack[-1][0] >= tree_line.depth:
        stack.pop()
    if tree_line.depth > 0:
        if not stack or stack[-1][0] != tree_line.depth - 1:
            raise MalformedTreeLine(
                f"node at depth {tree_line.depth} has no parent at depth "
                f"{tree_line.depth - 1}", file_name, tree_line.line_no)
        parent = stack[-1][1]
    else:
        parent = None

    name = tree_line.name
    if ":" in name:
        # A prefixed node in a diagram means the node was injected by a
        # different module; it is counted from that module's own diagram.
        warnings.append(
            f"{module_name}: foreign node '{name}' skipped "
            f"(line {tree_line.line_no})")
        stack.append((tree_line.depth,
                      SchemaNode(SchemaKind.CONTAINER, name, "__foreign__")))
        # Mark children foreign too by parking them on a detached node.
        return

    if tree_line.marker is NodeMarker.CASE:
        config = parent.config if parent is not None else True
    else:
        config = tree_line.flags == "rw"
    node = SchemaNode(_MARKER_TO_KIND[tree_line.marker], name, module_name,
                      config)
    if parent is not None:
        if parent.kind in (SchemaKind.LEAF, SchemaKind.LEAF_LIST):
            raise MalformedTreeLine(
                f"'{parent.name}' is typed as a {parent.kind.value} but has "
                "children", file_name, tree_line.line_no)
        if parent.origin_module == "__foreign__":
            stack.append((tree_line.depth, node))
            return
        parent.children.append(node)
    elif section.kind == "main":
        root.children.append(node)
    else:
        section.nodes.append(node)
    stack.append((tree_line.depth, node))


class TreeCorpus:
    """A set of tree diagrams resolved together.

    Cross-module augment sections are matched into the other diagrams'
    trees by segment-name path (prefixes carry no module identity inside
    a diagram), iterated to a fixpoint so that augments of augment-added
    nodes land too.  Record extraction then runs on the merged trees, so
    attribution and list ancestry come out exactly as in the native
    pipeline.
    """

    def __init__(self) -> None:
        self.documents: dict[str, TreeDocument] = {}
        self.warnings: list[str] = []

    def add(self, text: str, module_name: str,
            file_name: str = "<tree>") -> TreeDocument:
        doc = parse_tree_document(text, module_name, file_name)
        if module_name in self.documents:
            raise MalformedTreeLine(
                f"duplicate diagram for module '{module_name}'", file_name)
        self.documents[module_name] = doc
        self.warnings.extend(doc.warnings)
        return doc

    def records_by_module(self, vendor: str) -> dict[str, list[ParameterRecord]]:
        """Resolve all augment sections, then extract and group records."""
        merged = {name: copy.deepcopy(doc.root)
                  for name, doc in self.documents.items()}
        pending: list[tuple[str, str, list[SchemaNode]]] = []
        for name in sorted(self.documents):
            for target_path, nodes in self.documents[name].augments:
                pending.append((name, target_path, copy.deepcopy(nodes)))

        progress = True
        while progress and pending:
            progress = False
            remaining = []
            for entry in pending:
                source, target_path, nodes = entry
                segments = [seg.split(":", 1)[-1]
                            for seg in target_path.split("/") if seg]
                matches = []
                for mod_name, root in merged.items():
                    node = _walk_by_names(root, segments)
                    if node is not None:
                        matches.append((mod_name, node))
                if len(matches) == 1:
                    target = matches[0][1]
                    target.children.extend(nodes)
                    progress = True
                elif len(matches) > 1:
                    self.warnings.append(
                        f"{source}: augment path '{target_path}' is "
                        f"ambiguous across modules "
                        f"{sorted(m for m, _ in matches)}; skipped")
                    progress = True
                else:
                    remaining.append(entry)
            pending = remaining
        for source, target_path, _nodes in pending:
            self.warnings.append(
                f"{source}: augment target '{target_path}' not found in "
                "any loaded diagram; skipped")

        all_records: list[ParameterRecord] = []
        for _mod_name, root in sorted(merged.items()):
            all_records.extend(extract(root, vendor))
        return group_by_module(all_records, sorted(self.documents))


def _walk_by_names(root: SchemaNode, segments: list[str]) -> SchemaNode | None:
    node = root
    for segment in segments:
        node = next((c for c in node.children if c.name == segment), None)
        if node is None:
            return None
    return node


def parse_tree_diagram(text: str, module_name: str,
                       vendor: str) -> list[ParameterRecord]:
    """Parse a single diagram into this module's parameter records.

    Containers, choices and cases contribute path segments only; one
    record is emitted per leaf and per leaf-list, carrying the enclosing
    list ancestry.  Cross-module augment sections need the target
    module's diagram to recover list ancestry; without it they are
    skipped, matching what the native pipeline yields when the target
    module is missing from its module set.  Load diagrams through
    :class:`TreeCorpus` to resolve across modules.
    """
    corpus = TreeCorpus()
    doc = corpus.add(text, module_name)
    grouped = corpus.records_by_module(vendor)
    records = grouped.get(module_name, [])
    if doc.augments:
        corpus.warnings.append(
            f"{module_name}: {len(doc.augments)} augment section(s) "
            "skipped; parse the full diagram set through TreeCorpus to "
            "resolve them")
    return records
