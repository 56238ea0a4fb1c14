"""Minimal DOM: an element tree with mutation observation.

Elements hold strong parent<->child references, so a detached subtree is a
reference cycle and only the cyclic collector reclaims it — mirroring how a
managed heap treats DOM nodes, which the reference-leak probes depend on.
"""

from __future__ import annotations

from typing import Callable, Iterator

#: Reserved marker attribute carried by every framework-injected node.
PROBE_MARKER_ATTR = "data-posture-probe"


class Element:
    def __init__(self, tag: str, **attributes: str):
        self.tag = tag
        self.attributes: dict[str, str] = dict(attributes)
        self.children: list["Element"] = []
        self.parent: "Element | None" = None
        self.value: str = ""
        self.text: str = ""

    @property
    def id(self) -> str:
        return self.attributes.get("id", "")

    @property
    def style(self) -> str:
        return self.attributes.get("style", "")

    def set_attribute(self, name: str, value: str) -> None:
        self.attributes[name] = value
        doc = self._document()
        if doc is not None:
            doc._notify_attribute(self, name)

    def get_attribute(self, name: str) -> str | None:
        return self.attributes.get(name)

    def append_child(self, child: "Element") -> "Element":
        if child.parent is not None:
            child.parent.remove_child(child)
        child.parent = self
        self.children.append(child)
        doc = self._document()
        if doc is not None:
            doc._notify_child_list(self, added=[child], removed=[])
        return child

    def remove_child(self, child: "Element") -> None:
        self.children.remove(child)
        child.parent = None
        doc = self._document()
        if doc is not None:
            doc._notify_child_list(self, added=[], removed=[child])

    def remove(self) -> None:
        if self.parent is not None:
            self.parent.remove_child(self)

    def iter_tree(self) -> Iterator["Element"]:
        yield self
        for child in list(self.children):
            yield from child.iter_tree()

    def _document(self) -> "Document | None":
        node: Element | None = self
        while node is not None:
            owner = getattr(node, "_owner", None)
            if owner is not None:
                return owner
            node = node.parent
        return None

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        ident = f"#{self.id}" if self.id else ""
        return f"<Element {self.tag}{ident}>"


class MutationRecord:
    def __init__(
        self,
        kind: str,
        target: Element,
        added: list[Element] | None = None,
        removed: list[Element] | None = None,
        attribute_name: str | None = None,
    ):
        self.kind = kind  # "childList" | "attributes"
        self.target = target
        self.added = added or []
        self.removed = removed or []
        self.attribute_name = attribute_name


class MutationObserver:
    """Synchronous observer: callbacks fire as mutations happen."""

    def __init__(self, callback: Callable[[list[MutationRecord]], None]):
        self.callback = callback
        self._document: Document | None = None
        self.target: Element | None = None
        self.child_list = False
        self.attributes = False
        self.subtree = False

    def observe(
        self,
        target: Element,
        child_list: bool = False,
        attributes: bool = False,
        subtree: bool = False,
    ) -> None:
        doc = target._document()
        if doc is None:
            raise ValueError("cannot observe a detached element")
        self.target = target
        self.child_list = child_list
        self.attributes = attributes
        self.subtree = subtree
        self._document = doc
        doc._observers.append(self)

    def disconnect(self) -> None:
        if self._document is not None and self in self._document._observers:
            self._document._observers.remove(self)
        self._document = None

    def _watches(self, node: Element) -> bool:
        if self.target is None:
            return False
        if node is self.target:
            return True
        if not self.subtree:
            return node.parent is self.target
        walk: Element | None = node
        while walk is not None:
            if walk is self.target:
                return True
            walk = walk.parent
        return False


class Document:
    def __init__(self, title: str = ""):
        self.title = title
        self.body = Element("body")
        self.body._owner = self  # type: ignore[attr-defined]
        self._observers: list[MutationObserver] = []
        #: Content-script hooks (extension seam): called on every insertion.
        self.insert_hooks: list[Callable[[Element], None]] = []

    def create_element(self, tag: str, **attributes: str) -> Element:
        return Element(tag, **attributes)

    def get_element_by_id(self, element_id: str) -> Element | None:
        for node in self.body.iter_tree():
            if node.id == element_id:
                return node
        return None

    def contains(self, element: Element) -> bool:
        return any(node is element for node in self.body.iter_tree())

    def marked_nodes(self) -> list[Element]:
        return [
            node
            for node in self.body.iter_tree()
            if PROBE_MARKER_ATTR in node.attributes
        ]

    def _notify_child_list(
        self, target: Element, added: list[Element], removed: list[Element]
    ) -> None:
        for node in added:
            for hook in list(self.insert_hooks):
                hook(node)
            for sub in list(node.iter_tree()):
                if sub is not node:
                    for hook in list(self.insert_hooks):
                        hook(sub)
        record = MutationRecord("childList", target, added=added, removed=removed)
        for obs in list(self._observers):
            if obs.child_list and obs._watches(target):
                obs.callback([record])

    def _notify_attribute(self, target: Element, name: str) -> None:
        record = MutationRecord("attributes", target, attribute_name=name)
        for obs in list(self._observers):
            if obs.attributes and obs._watches(target):
                obs.callback([record])
