"""Tool registry, deterministic mock services, and scenario/suite loading."""

from .registry import MissingOutputSchema, ParamSpec, ToolRegistry, ToolSpec
from .scenario import Scenario, SchemaViolation, ToolExecutionError, invoke_tool
from .services import build_registry, handler_for, service_catalog
from .suites import (
    Injection,
    SuiteCase,
    SuiteError,
    load_suite,
    load_suites,
    packaged_suite_path,
    packaged_suites_root,
)

__all__ = [
    "Injection",
    "MissingOutputSchema",
    "ParamSpec",
    "Scenario",
    "SchemaViolation",
    "SuiteCase",
    "SuiteError",
    "ToolExecutionError",
    "ToolRegistry",
    "ToolSpec",
    "build_registry",
    "handler_for",
    "invoke_tool",
    "load_suite",
    "load_suites",
    "packaged_suite_path",
    "packaged_suites_root",
    "service_catalog",
]
