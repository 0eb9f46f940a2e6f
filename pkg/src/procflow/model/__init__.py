"""Process metamodel: typed entity/edge graphs, edits, validation, views, diffs."""

from procflow.model.compare import DiffReport, FieldChange, InterfaceReport, diff, interface_check
from procflow.model.edits import (
    UNSET,
    AddEdge,
    AddEntity,
    Edit,
    RemoveEdge,
    RemoveEntity,
    UpdateEntity,
    apply_edit,
    apply_edits,
    edit_from_dict,
    edit_to_dict,
)
from procflow.model.types import (
    Attribute,
    AttributeValue,
    DocRefValue,
    Edge,
    EdgeKind,
    EdgeRule,
    Entity,
    EntityKind,
    LinkValue,
    ModelingLanguage,
    NumberValue,
    ProcessModel,
    TextValue,
    default_language,
    empty_model,
    is_valid_id,
    model_from_dict,
    model_to_dict,
)
from procflow.model.validate import Issue, Severity, ValidationReport, validate
from procflow.model.views import ByKind, ByRole, BySubtree, ViewSpec, project

__all__ = [
    "Attribute",
    "AttributeValue",
    "AddEdge",
    "AddEntity",
    "ByKind",
    "ByRole",
    "BySubtree",
    "DiffReport",
    "DocRefValue",
    "Edge",
    "EdgeKind",
    "EdgeRule",
    "Edit",
    "Entity",
    "EntityKind",
    "FieldChange",
    "InterfaceReport",
    "Issue",
    "LinkValue",
    "ModelingLanguage",
    "NumberValue",
    "ProcessModel",
    "RemoveEdge",
    "RemoveEntity",
    "Severity",
    "TextValue",
    "UNSET",
    "UpdateEntity",
    "ValidationReport",
    "ViewSpec",
    "apply_edit",
    "apply_edits",
    "default_language",
    "diff",
    "edit_from_dict",
    "edit_to_dict",
    "empty_model",
    "interface_check",
    "is_valid_id",
    "model_from_dict",
    "model_to_dict",
    "project",
    "validate",
]
