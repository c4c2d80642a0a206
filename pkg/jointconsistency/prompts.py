# @file prompts.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Judge prompt templates.

Prompts are produced by template substitution only. A judge backend must send
the messages exactly as rendered; the record id of every judge interaction is
a hash of them.

Independent prompts are three messages: the question as a user turn, the
trace as the assistant turn, then the evaluation request. Pairwise prompts are
a single user message in which the "Response 1" slot holds the trace whose
preference probability is being asked for.
"""
import collections

from .traces import MATH, CODE, TASKS, Question

USER = "user"
ASSISTANT = "assistant"

INDEPENDENT_MATH = "independent_math"
PAIRWISE_MATH = "pairwise_math"
INDEPENDENT_CODE = "independent_code"
PAIRWISE_CODE = "pairwise_code"

Message = collections.namedtuple("Message", ["role", "text"])
PromptBundle = collections.namedtuple("PromptBundle", ["messages", "kind"])

SCORE_GRID = "0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0"

MATH_QUESTION_TEMPLATE = (
    "Please reason step by step, and put your final answer within \\boxed{{}}.\n"
    "\n"
    "{question}")

MATH_GENERATION_TEMPLATE = (
    "{question}\n"
    "\n"
    "Please reason step by step, and put your final answer within \\boxed{{}}.")

CODE_QUESTION_TEMPLATE = (
    "Given the following Python function and input, predict the output.\n"
    "\n"
    "Function:\n"
    "{code}\n"
    "\n"
    "Input:\n"
    "{input}\n"
    "\n"
    "Please think step by step after \"Reasoning:\n\n\" and then leave the output "
    "after \"Output:\n\n\". Note the output should be a python object and please "
    "ignore markdown format.{question}")

EVALUATION_REQUEST = (
    "Please evaluate the above answer based on the following criteria: \n"
    "1. Is the answer correct? \n"
    "2. Is the reasoning process correct? \n"
    "Please choose an evaluation score among " + SCORE_GRID + ".\n"
    "\n"
    "Please only output only the evaluation score.")

PAIRWISE_MATH_TEMPLATE = (
    "Suppose there are two responses to the same question. Please output the "
    "probability that Response 1 is a better answer than Response 2.\n"
    "\n"
    "#### Question ####\n"
    "\n"
    "{question}\n"
    "\n"
    "#### Response 1 ####\n"
    "\n"
    "{response1}\n"
    "\n"
    "#### Response 2 ####\n"
    "\n"
    "{response2}\n"
    "\n"
    "#### Instruction ####\n"
    "\n"
    "Now, please output the probability (a real number between 0 and 1) that "
    "Response 1 is a better answer than Response 2. Please only output the number.")

PAIRWISE_CODE_TEMPLATE = (
    "Suppose there are two responses to the same Python function and input. "
    "Please output the probability that Response 1 is a better answer than "
    "Response 2. \n"
    "\n"
    "#### Python function and input #### \n"
    "\n"
    "Function:\n"
    "{code}\n"
    "\n"
    "Input:\n"
    "{input}\n"
    "\n"
    "#### Response 1 ####\n"
    "{response1}\n"
    "\n"
    "#### Response 2 ####\n"
    "{response2}\n"
    "\n"
    "#### Instruction ####\n"
    "\n"
    "Now, please output the probability (a real number between 0 and 1) that "
    "Response 1 is a better answer than Response 2. Please only output the number.")


def _as_question(question):
    if isinstance(question, Question):
        return question
    return Question(question_id=None, text=question)


def _check_task(task):
    if task not in TASKS:
        raise ValueError("Unknown task {!r}".format(task))


def _code_parts(question):
    """Function source and input of a code question.

    A bare string is taken to be the function source with no input.
    """
    code = question.code if question.code is not None else question.text
    input_str = question.input if question.input is not None else ""
    suffix = question.text if question.code is not None else ""
    return code, input_str, suffix or ""


def render_question_turn(question, task):
    question = _as_question(question)
    _check_task(task)
    if task == MATH:
        return MATH_QUESTION_TEMPLATE.format(question=question.text)
    code, input_str, suffix = _code_parts(question)
    return CODE_QUESTION_TEMPLATE.format(code=code, input=input_str, question=suffix)


def render_independent_prompt(question, trace, task=MATH):
    """Bundle asking the judge to score one trace on the 11-point grid."""
    kind = INDEPENDENT_MATH if task == MATH else INDEPENDENT_CODE
    messages = (Message(USER, render_question_turn(question, task)),
                Message(ASSISTANT, trace.content),
                Message(USER, EVALUATION_REQUEST))
    return PromptBundle(messages, kind)


def render_pairwise_prompt(question, trace_i, trace_j, task=MATH):
    """Bundle asking for the probability that trace_i beats trace_j."""
    question = _as_question(question)
    _check_task(task)
    if trace_i.trace_id == trace_j.trace_id:
        raise ValueError("Pairwise prompt needs two distinct traces, got {!r} twice"
                         .format(trace_i.trace_id))
    if task == MATH:
        text = PAIRWISE_MATH_TEMPLATE.format(question=question.text,
                                             response1=trace_i.content,
                                             response2=trace_j.content)
        kind = PAIRWISE_MATH
    else:
        code, input_str, _ = _code_parts(question)
        text = PAIRWISE_CODE_TEMPLATE.format(code=code,
                                             input=input_str,
                                             response1=trace_i.content,
                                             response2=trace_j.content)
        kind = PAIRWISE_CODE
    return PromptBundle((Message(USER, text),), kind)


def render_generation_prompt(question, task=MATH):
    """Prompt used to generate traces; kept for reference alongside pools."""
    question = _as_question(question)
    _check_task(task)
    if task == MATH:
        text = MATH_GENERATION_TEMPLATE.format(question=question.text)
    else:
        code, input_str, suffix = _code_parts(question)
        text = CODE_QUESTION_TEMPLATE.format(code=code, input=input_str, question=suffix)
    return PromptBundle((Message(USER, text),), "generation_" + task)


def bundle_to_json(bundle):
    """Chat-messages form of a bundle, as sent to backends and hashed."""
    return [{"role": m.role, "content": m.text} for m in bundle.messages]
