"""Candidate producers: prompt construction, LLM client, post-processing, enumeration."""

from .enumerator import (EnumerativeGenerator, EnumeratorState, ReplayGenerator, enumerate_next,
                         iter_terms)
from .llm import Completion, LlmConfig, LlmGenerator, llm_generate
from .postprocess import postprocess
from .prompts import MissingPlaceholder, Prompt, PromptTemplate, build_prompt

__all__ = [
    "Completion", "EnumerativeGenerator", "EnumeratorState", "LlmConfig", "LlmGenerator",
    "MissingPlaceholder", "Prompt", "PromptTemplate", "ReplayGenerator", "build_prompt",
    "enumerate_next", "iter_terms", "llm_generate", "postprocess",
]
