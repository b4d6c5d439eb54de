"""Resolve parsed YANG modules into expanded schema trees.

The resolver turns a set of :class:`~oplex.yang_parser.RawStatement` trees
into one expanded data tree per module: submodules are spliced in,
``uses`` references are replaced by copies of their grouping bodies,
``augment`` statements are applied at their target paths, and rpc,
action and notification subtrees are dropped.  Every node that survives
records which module contributed it, which is what later makes per-module
attribution of augment-injected parameters possible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

from .errors import OplexError
from .yang_parser import RawStatement, YangSyntaxError, parse, tokenize

#: Statement keywords that start a countable data subtree.
_DATA_KEYWORDS = frozenset({
    "container", "leaf", "leaf-list", "list", "choice", "case", "uses",
    "anydata", "anyxml",
})

#: Subtrees excluded from the data tree entirely.
_NON_DATA_SUBTREES = frozenset({"rpc", "notification", "action"})


class SchemaKind(enum.Enum):
    MODULE_ROOT = "module-root"
    CONTAINER = "container"
    LIST = "list"
    LEAF = "leaf"
    LEAF_LIST = "leaf-list"
    CHOICE = "choice"
    CASE = "case"


class UnknownModule(OplexError):
    """The requested module is not part of the module set."""


class DuplicateModule(OplexError):
    """Two files declare the same module or submodule name."""


class MissingInclude(OplexError):
    """A submodule named in an ``include`` is not in the module set."""


class UnresolvedGrouping(OplexError):
    """A ``uses`` statement references a grouping that cannot be found."""


class CircularGrouping(OplexError):
    """Grouping expansion entered a ``uses`` cycle."""


@dataclass
class SchemaNode:
    """One node of a resolved schema tree.

    ``origin_module`` names the module whose text contributed the node:
    the resolution target for ordinary nodes, the augmenting module for
    augment-injected ones.  ``config`` is inherited from the parent and
    forced to False everywhere below a ``config false`` node.
    """

    kind: SchemaKind
    name: str
    origin_module: str
    config: bool = True
    children: list["SchemaNode"] = field(default_factory=list)
    key_names: tuple[str, ...] = ()

    def walk(self):
        """Yield every node of the subtree in depth-first order."""
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class ModuleSet:
    """A parsed collection of modules and submodules.

    ``prefix_bindings`` maps, per (sub)module, each import prefix to the
    imported module's name; a (sub)module's own prefix (or ``belongs-to``
    prefix) maps to itself (or its parent module).
    """

    modules: dict[str, RawStatement] = field(default_factory=dict)
    prefix_bindings: dict[str, dict[str, str]] = field(default_factory=dict)
    source_files: dict[str, Path] = field(default_factory=dict)
    unresolved_imports: dict[str, set[str]] = field(default_factory=dict)

    def module_names(self) -> list[str]:
        """Names of proper modules (submodules excluded), sorted."""
        return sorted(name for name, stmt in self.modules.items()
                      if stmt.keyword == "module")

    def owner_of(self, name: str) -> str:
        """Attribution module for a (sub)module: itself, or its parent."""
        stmt = self.modules[name]
        if stmt.keyword == "module":
            return name
        belongs = stmt.arg_of("belongs-to")
        return belongs if belongs is not None else name

    def add(self, root: RawStatement, source: Path | None = None) -> None:
        name = root.argument or ""
        if name in self.modules:
            first = self.source_files.get(name)
            raise DuplicateModule(
                f"module '{name}' declared more than once"
                + (f" (first seen in {first})" if first else ""))
        self.modules[name] = root
        if source is not None:
            self.source_files[name] = source
        self.prefix_bindings[name] = _prefix_bindings(root)

    def check_imports(self) -> None:
        for name, root in self.modules.items():
            missing = {imp.argument for imp in root.find_all("import")
                       if imp.argument and imp.argument not in self.modules}
            if missing:
                self.unresolved_imports[name] = missing


def _prefix_bindings(root: RawStatement) -> dict[str, str]:
    bindings: dict[str, str] = {}
    own_name = root.argument or ""
    prefix = root.arg_of("prefix")
    if prefix:
        bindings[prefix] = own_name
    belongs = root.find("belongs-to")
    if belongs is not None and belongs.argument:
        parent_prefix = belongs.arg_of("prefix")
        if parent_prefix:
            bindings[parent_prefix] = belongs.argument
    for imp in root.find_all("import"):
        imp_prefix = imp.arg_of("prefix")
        if imp_prefix and imp.argument:
            bindings[imp_prefix] = imp.argument
    return bindings


def load_module_set(paths: list[Path | str]) -> ModuleSet:
    """Parse ``.yang`` files into a :class:`ModuleSet`.

    Files must be valid UTF-8; anything else is rejected rather than
    lossy-decoded, since mangled identifiers would silently corrupt
    counts.  Parse errors propagate with the file name attached.
    """
    module_set = ModuleSet()
    for raw_path in paths:
        path = Path(raw_path)
        data = path.read_bytes()
        try:
            text = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise OplexError(f"{path}: not valid UTF-8 ({exc})") from None
        root = parse(tokenize(text, str(path)), str(path))
        module_set.add(root, source=path)
    module_set.check_imports()
    return module_set


@dataclass
class _Context:
    """Expansion context while building one module's tree.

    ``lexical`` is the (sub)module whose text is being walked; it decides
    prefix resolution and grouping scope.  ``attribution`` is the module
    charged with the resulting nodes.
    """

    lexical: str
    attribution: str
    scopes: tuple[dict[str, RawStatement], ...]
    uses_stack: tuple[tuple[str, str], ...] = ()


class _Resolver:
    def __init__(self, module_set: ModuleSet, target: str,
                 features: set[str] | None, warnings: list[str]) -> None:
        self.module_set = module_set
        self.target = target
        self.features = features
        self.warnings = warnings
        self.guarded_count = 0
        # name -> merged top-level groupings of module + its submodules
        self._grouping_cache: dict[str, dict[str, RawStatement]] = {}

    # -- statement gathering ------------------------------------------------

    def body_statements(self, name: str) -> list[tuple[RawStatement, str]]:
        """Body of a (sub)module with included submodule bodies spliced in.

        Returns (statement, lexical-module) pairs so that prefixes inside
        submodule text resolve against the submodule's own imports.
        """
        result: list[tuple[RawStatement, str]] = []
        seen: set[str] = set()

        def collect(mod_name: str) -> None:
            if mod_name in seen:
                return
            seen.add(mod_name)
            root = self.module_set.modules.get(mod_name)
            if root is None:
                raise MissingInclude(
                    f"'{self.target}' includes '{mod_name}' which is not loaded")
            for stmt in root.children:
                if stmt.keyword == "include" and stmt.argument:
                    collect(stmt.argument)
                else:
                    result.append((stmt, mod_name))

        collect(name)
        return result

    def top_level_groupings(self, module: str) -> dict[str, RawStatement]:
        cached = self._grouping_cache.get(module)
        if cached is None:
            cached = {}
            for stmt, _lexical in self.body_statements(module):
                if stmt.keyword == "grouping" and stmt.argument:
                    cached.setdefault(stmt.argument, stmt)
            self._grouping_cache[module] = cached
        return cached

    # -- prefix handling ----------------------------------------------------

    def resolve_prefix(self, lexical: str, prefix: str) -> str | None:
        return self.module_set.prefix_bindings.get(lexical, {}).get(prefix)

    def split_reference(self, ref: str, ctx: _Context) -> tuple[str, str]:
        """Split ``prefix:name`` into (module, name) in the given context."""
        if ":" in ref:
            prefix, name = ref.split(":", 1)
            module = self.resolve_prefix(ctx.lexical, prefix)
            if module is None:
                raise UnresolvedGrouping(
                    f"unknown prefix '{prefix}' in '{ref}' "
                    f"(module {ctx.lexical})")
            return module, name
        return self.module_set.owner_of(ctx.lexical), ref

    # -- tree building ------------------------------------------------------

    def build(self) -> SchemaNode:
        root_stmt = self.module_set.modules.get(self.target)
        if root_stmt is None:
            raise UnknownModule(f"module '{self.target}' is not loaded")
        if root_stmt.keyword != "module":
            raise UnknownModule(
                f"'{self.target}' is a submodule; resolve its parent module")
        root = SchemaNode(SchemaKind.MODULE_ROOT, self.target, self.target)
        body = self.body_statements(self.target)
        base_scope = self.top_level_groupings(self.target)
        for stmt, lexical in body:
            ctx = _Context(lexical, self.target, (base_scope,))
            self.build_child(root, stmt, ctx, config=True)
        self.apply_augments(root)
        if self.features is None and self.guarded_count:
            self.warnings.append(
                f"{self.target}: {self.guarded_count} if-feature guarded "
                "node(s) counted unconditionally (no feature set supplied)")
        return root

    def build_child(self, parent: SchemaNode, stmt: RawStatement,
                    ctx: _Context, config: bool) -> None:
        keyword = stmt.keyword
        if keyword in _NON_DATA_SUBTREES or keyword not in _DATA_KEYWORDS:
            return
        if not self.feature_enabled(stmt, ctx):
            return
        if keyword in ("anydata", "anyxml"):
            self.warnings.append(
                f"{ctx.attribution}: {keyword} '{stmt.argument}' treated as "
                "an opaque zero-parameter node")
            return
        if keyword == "uses":
            self.expand_uses(parent, stmt, ctx, config)
            return
        config = self.effective_config(stmt, config)
        name = stmt.argument or ""
        if keyword == "leaf":
            parent.children.append(
                SchemaNode(SchemaKind.LEAF, name, ctx.attribution, config))
            return
        if keyword == "leaf-list":
            parent.children.append(
                SchemaNode(SchemaKind.LEAF_LIST, name, ctx.attribution, config))
            return
        if keyword == "choice":
            node = SchemaNode(SchemaKind.CHOICE, name, ctx.attribution, config)
            parent.children.append(node)
            self.build_choice_body(node, stmt, ctx, config)
            return
        kind = {"container": SchemaKind.CONTAINER, "list": SchemaKind.LIST,
                "case": SchemaKind.CASE}[keyword]
        node = SchemaNode(kind, name, ctx.attribution, config)
        if keyword == "list":
            key = stmt.arg_of("key")
            node.key_names = tuple(key.split()) if key else ()
        parent.children.append(node)
        inner_ctx = self.push_scope(ctx, stmt)
        for child in stmt.children:
            self.build_child(node, child, inner_ctx, config)

    def build_choice_body(self, choice: SchemaNode, stmt: RawStatement,
                          ctx: _Context, config: bool) -> None:
        """Materialize case children, wrapping shorthand cases explicitly."""
        inner_ctx = self.push_scope(ctx, stmt)
        for child in stmt.children:
            if child.keyword == "case":
                self.build_child(choice, child, inner_ctx, config)
            elif child.keyword in _DATA_KEYWORDS:
                # Shorthand case: RFC 7950 wraps the node in an implicit
                # case of the same name, and so do tree diagrams.
                case = SchemaNode(SchemaKind.CASE, child.argument or "",
                                  ctx.attribution, config)
                choice.children.append(case)
                self.build_child(case, child, inner_ctx, config)
                if not case.children:
                    choice.children.pop()

    def push_scope(self, ctx: _Context, stmt: RawStatement) -> _Context:
        local = {g.argument: g for g in stmt.find_all("grouping") if g.argument}
        if not local:
            return ctx
        return _Context(ctx.lexical, ctx.attribution, (local,) + ctx.scopes,
                        ctx.uses_stack)

    def effective_config(self, stmt: RawStatement, inherited: bool) -> bool:
        explicit = stmt.arg_of("config")
        if explicit is None:
            return inherited
        # "config true" below a "config false" subtree is invalid YANG;
        # the state subtree wins so the invariant holds regardless.
        return inherited and explicit == "true"

    def feature_enabled(self, stmt: RawStatement, ctx: _Context) -> bool:
        guards = stmt.find_all("if-feature")
        if not guards:
            return True
        if self.features is None:
            self.guarded_count += 1
            return True
        return all(_eval_feature_expr(g.argument or "", self.features)
                   for g in guards)

    # -- uses / grouping expansion -------------------------------------------

    def expand_uses(self, parent: SchemaNode, stmt: RawStatement,
                    ctx: _Context, config: bool) -> None:
        ref = stmt.argument or ""
        grouping, grouping_ctx = self.find_grouping(ref, ctx)
        key = (grouping_ctx.lexical, grouping.argument or "")
        if key in ctx.uses_stack:
            cycle = " -> ".join(f"{m}:{g}" for m, g in ctx.uses_stack + (key,))
            raise CircularGrouping(f"grouping cycle: {cycle}")
        inner_ctx = _Context(grouping_ctx.lexical, ctx.attribution,
                             grouping_ctx.scopes, ctx.uses_stack + (key,))
        inner_ctx = self.push_scope(inner_ctx, grouping)
        mark = len(parent.children)
        for child in grouping.children:
            self.build_child(parent, child, inner_ctx, config)
        expansion = parent.children[mark:]
        for refine in stmt.find_all("refine"):
            self.apply_refine(expansion, refine, ctx)
        for augment in stmt.find_all("augment"):
            self.apply_relative_augment(expansion, augment, ctx, config)

    def find_grouping(self, ref: str, ctx: _Context) -> tuple[RawStatement, _Context]:
        """Locate a grouping: lexical scopes for plain names, top-level
        groupings of the referenced module for prefixed ones."""
        if ":" in ref:
            prefix, name = ref.split(":", 1)
            module = self.resolve_prefix(ctx.lexical, prefix)
            if module is None or module not in self.module_set.modules:
                raise UnresolvedGrouping(
                    f"uses '{ref}': unknown prefix or module "
                    f"(referenced from {ctx.lexical})")
            owner = self.module_set.owner_of(module)
            if owner == self.module_set.owner_of(ctx.lexical):
                return self.find_grouping(name, ctx)
            groupings = self.top_level_groupings(module)
            grouping = groupings.get(name)
            if grouping is None:
                raise UnresolvedGrouping(
                    f"grouping '{name}' not found in module '{module}'")
            return grouping, _Context(module, ctx.attribution, (groupings,))
        for scope in ctx.scopes:
            if ref in scope:
                return scope[ref], ctx
        # A submodule sees the merged top-level groupings of its parent.
        owner = self.module_set.owner_of(ctx.lexical)
        if owner != ctx.lexical:
            merged = self.top_level_groupings(owner)
            if ref in merged:
                base = self.top_level_groupings(owner)
                return merged[ref], _Context(ctx.lexical, ctx.attribution,
                                             (base,))
        raise UnresolvedGrouping(
            f"grouping '{ref}' not found (referenced from {ctx.lexical})")

    def apply_refine(self, expansion: list[SchemaNode], refine: RawStatement,
                     ctx: _Context) -> None:
        node = _find_descendant(expansion, refine.argument or "")
        if node is None:
            self.warnings.append(
                f"{ctx.attribution}: refine target '{refine.argument}' "
                "not found in grouping expansion; ignored")
            return
        for sub in refine.children:
            if sub.keyword == "config":
                _force_config(node, sub.argument == "true")
            elif sub.keyword != "description":
                self.warnings.append(
                    f"{ctx.attribution}: refine '{refine.argument}': "
                    f"'{sub.keyword}' refinement ignored")

    def apply_relative_augment(self, expansion: list[SchemaNode],
                               augment: RawStatement, ctx: _Context,
                               config: bool) -> None:
        node = _find_descendant(expansion, augment.argument or "")
        if node is None:
            self.warnings.append(
                f"{ctx.attribution}: uses-augment target '{augment.argument}' "
                "not found in grouping expansion; skipped")
            return
        self.append_augment_body(node, augment, ctx)

    # -- top-level augments ---------------------------------------------------

    def apply_augments(self, root: SchemaNode) -> None:
        """Apply every augment in the set whose target lies in this tree.

        Augments may target nodes introduced by other augments, so this
        runs to a fixpoint.  Iteration order is sorted for determinism.
        """
        pending: list[tuple[str, str, RawStatement, str]] = []
        for name in sorted(self.module_set.modules):
            if self.module_set.modules[name].keyword != "module":
                continue
            for stmt, lexical in self.body_statements(name):
                if stmt.keyword == "augment" and stmt.argument:
                    pending.append((name, lexical, stmt, stmt.argument))
        pending.sort(key=lambda item: (item[0], item[3]))
        progress = True
        while progress and pending:
            progress = False
            remaining = []
            for entry in pending:
                attribution, lexical, stmt, path = entry
                outcome = self.try_augment(root, attribution, lexical, stmt, path)
                if outcome == "applied":
                    progress = True
                elif outcome == "pending":
                    remaining.append(entry)
            pending = remaining
        for attribution, _lexical, _stmt, path in pending:
            self.warnings.append(
                f"{attribution}: augment target '{path}' not found in "
                f"'{self.target}'; skipped")

    def try_augment(self, root: SchemaNode, attribution: str, lexical: str,
                    stmt: RawStatement, path: str) -> str:
        """Returns 'applied', 'pending' (retry later) or 'foreign'."""
        segments = [s for s in path.split("/") if s]
        if not segments:
            return "foreign"
        ctx = _Context(lexical, attribution,
                       (self.top_level_groupings(attribution),))
        head_module, _head_name = self.split_reference(segments[0], ctx)
        if head_module != self.target:
            return "foreign"
        node: SchemaNode = root
        for segment in segments:
            module, name = self.split_reference(segment, ctx)
            found = None
            for child in node.children:
                if child.name == name and child.origin_module == module:
                    found = child
                    break
            if found is None:
                return "pending"
            node = found
        if node.kind in (SchemaKind.LEAF, SchemaKind.LEAF_LIST):
            self.warnings.append(
                f"{attribution}: augment target '{path}' is a leaf; skipped")
            return "applied"
        if not self.feature_enabled(stmt, ctx):
            return "applied"
        self.append_augment_body(node, stmt, ctx)
        return "applied"

    def append_augment_body(self, target: SchemaNode, stmt: RawStatement,
                            ctx: _Context) -> None:
        config = target.config
        if target.kind is SchemaKind.CHOICE:
            self.build_choice_body(target, stmt, ctx, config)
            return
        inner_ctx = self.push_scope(ctx, stmt)
        for child in stmt.children:
            self.build_child(target, child, inner_ctx, config)


def _find_descendant(nodes: list[SchemaNode], path: str) -> SchemaNode | None:
    """Follow a relative path of plain (or prefixed) names."""
    current = nodes
    node = None
    for segment in (s for s in path.split("/") if s):
        name = segment.split(":", 1)[-1]
        node = next((n for n in current if n.name == name), None)
        if node is None:
            return None
        current = node.children
    return node


def _force_config(node: SchemaNode, value: bool) -> None:
    node.config = value
    if not value:
        for child in node.children:
            _force_config(child, False)


def _eval_feature_expr(expr: str, features: set[str]) -> bool:
    """Evaluate an if-feature expression (``not``/``and``/``or``/parens).

    Prefixes on feature names are dropped; features are matched by local
    name against the supplied set.
    """
    tokens = expr.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        token = tokens[pos]
        pos += 1
        return token

    def parse_or() -> bool:
        value = parse_and()
        while peek() == "or":
            take()
            value = parse_and() or value
        return value

    def parse_and() -> bool:
        value = parse_not()
        while peek() == "and":
            take()
            value = parse_not() and value
        return value

    def parse_not() -> bool:
        if peek() == "not":
            take()
            return not parse_not()
        if peek() == "(":
            take()
            value = parse_or()
            if peek() == ")":
                take()
            return value
        token = take()
        return token.split(":", 1)[-1] in features

    if not tokens:
        return True
    return parse_or()


def resolve(module_set: ModuleSet, target: str, *,
            features: set[str] | None = None,
            warnings: list[str] | None = None) -> SchemaNode:
    """Build the expanded schema tree for one module.

    All modules in the set contribute: any of their augments whose target
    path resolves inside ``target``'s tree is applied, with the injected
    nodes tagged as originating from the augmenting module.  rpc, action
    and notification subtrees are excluded.

    ``features``: when given, nodes guarded by ``if-feature`` are kept
    only if their expression evaluates true against this set; when None,
    guarded nodes are counted unconditionally and a warning records how
    many there were.

    ``warnings``: optional list collecting human-readable warnings
    (unresolved augment targets, skipped anydata/anyxml, ...).
    """
    sink = warnings if warnings is not None else []
    return _Resolver(module_set, target, features, sink).build()
