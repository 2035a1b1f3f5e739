#!/usr/bin/env python3
"""Regenerate the committed test fixtures.

Produces, deterministically:
  - tests/fixtures/corpus20.jsonl        20-example causal QA corpus
  - tests/fixtures/transcripts20.jsonl   recorded responses for every prompt
  - tests/fixtures/annotations.csv       two-rater annotation file
  - src/ibe_eval/data/nouns.tsv          noun lexicon covering the corpus
  - src/ibe_eval/data/embeddings_toy.txt toy embedding table for the corpus
  - tests/fixtures/golden/               artifacts of a full replay run

Run from the repository root:  python scripts/build_fixtures.py
The golden artifacts are hand-checked before committing; tests compare
against them byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from ibe_eval.config import PipelineConfig  # noqa: E402
from ibe_eval.datasets import dump_canonical, load_canonical  # noqa: E402
from ibe_eval.generation import build_explanation_prompt  # noqa: E402
from ibe_eval.model import CqaExample, Direction, Source  # noqa: E402
from ibe_eval.pipeline import StageRunner, read_jsonl  # noqa: E402
from ibe_eval.scorers import tokenize  # noqa: E402
from ibe_eval.transcripts import LlmRequest, ScriptedClient, StoreMode, TranscriptStore  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"
DATA = REPO / "src" / "ibe_eval" / "data"
MODEL_NAME = "fixture-model"

# ---------------------------------------------------------------------------
# corpus and authored responses
#
# Response texts mimic the generation prompt's required shape. Explanations
# for gold candidates are short, declarative chains whose step clauses echo
# one another; explanations for distractors are longer, introduce extra
# concepts, and hedge their assumptions and summaries.
# ---------------------------------------------------------------------------

def R(steps, summary=None, omit_summary=False):
    return {"steps": steps, "summary": summary, "omit_summary": omit_summary}


CORPUS = [
    # --- gold index 0 -------------------------------------------------------
    dict(
        id="ex01-balloon",
        direction="cause",
        context="The balloon deflated.",
        candidates=(
            "The balloon was pricked with a needle.",
            "The balloon was tied to a chair.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "the balloon is pricked with a needle",
                        "the balloon deflates",
                        "A pricked balloon cannot stay inflated.",
                    )
                ],
                "The needle prick made the balloon deflate.",
            ),
            R(
                [
                    (
                        "the balloon is tied to a chair",
                        "the balloon rubs against the chair legs",
                        "A tied balloon may swing and rub in a breeze.",
                    ),
                    (
                        "the balloon rubs against the chair legs",
                        "the balloon skin weakens",
                        "Friction could wear down thin rubber.",
                    ),
                    (
                        "the balloon skin weakens",
                        "tiny holes might open in the skin",
                        "Weak rubber probably develops small leaks.",
                    ),
                    (
                        "tiny holes open in the skin",
                        "the balloon deflates",
                        "Air can escape through small holes.",
                    ),
                ],
                "If the balloon kept rubbing the chair, it might slowly have deflated.",
            ),
        ],
    ),
    dict(
        id="ex02-plants",
        direction="cause",
        context="The plants in the garden wilted.",
        candidates=(
            "The garden missed watering for two weeks.",
            "The gardener bought a new hat.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "the garden misses watering for two weeks",
                        "the soil in the garden dries out",
                        "Soil loses its moisture when nobody waters it.",
                    ),
                    (
                        "the soil in the garden dries out",
                        "the plants in the garden wilt",
                        "Plants wilt when their roots find no moisture.",
                    ),
                ],
                "Two dry weeks drained the soil, so the plants wilted.",
            ),
            R(
                [
                    (
                        "the gardener buys a new hat",
                        "the gardener perhaps spends the afternoon at the market",
                        "Shopping trips could take up gardening time.",
                    ),
                    (
                        "the gardener spends the afternoon at the market",
                        "the garden misses some care that day",
                        "A gardener at the market presumably leaves the beds alone.",
                    ),
                    (
                        "the garden misses some care that day",
                        "the plants in the garden wilt",
                        "We assume one missed afternoon might already harm the plants.",
                    ),
                ],
                "Maybe the hat purchase distracted the gardener until the plants wilted.",
            ),
        ],
    ),
    # flipped example: the distractor explanation is tighter than the gold one
    dict(
        id="ex03-flood",
        direction="cause",
        context="The streets were flooded this morning.",
        candidates=(
            "A heavy storm dropped rain all night.",
            "The bakery opened early today.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "a heavy storm drops rain all night",
                        "sheets of rain pour onto the streets for hours",
                        "A long storm usually delivers an enormous volume of water.",
                    ),
                    (
                        "sheets of rain pour onto the streets for hours",
                        "the drains perhaps fall behind the downpour",
                        "City drains might struggle with hours of heavy rain.",
                    ),
                    (
                        "the drains fall behind the downpour",
                        "the streets become flooded by morning",
                        "Water stands wherever the drains lag behind.",
                    ),
                ],
                "The storm likely overwhelmed the drains until the streets flooded.",
            ),
            R(
                [
                    (
                        "the bakery opens early today",
                        "the bakery washes the street front with buckets of water",
                        "Early opening starts with washing the street front.",
                    ),
                    (
                        "the bakery washes the street front with buckets of water",
                        "the streets look flooded this morning",
                        "Wash water spreads across the whole street.",
                    ),
                ],
                "The bakery wash covered the streets in water this morning.",
            ),
        ],
    ),
    dict(
        id="ex04-window",
        direction="cause",
        context="The kitchen window shattered.",
        candidates=(
            "A football hit the window.",
            "The kettle whistled in the kitchen.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "a football hits the window",
                        "the window glass cracks under the impact",
                        "Window glass breaks when a heavy ball strikes it.",
                    ),
                    (
                        "the window glass cracks under the impact",
                        "the kitchen window shatters",
                        "A cracked pane falls apart at once.",
                    ),
                ],
                "The football struck the glass hard enough to shatter the window.",
            ),
            R(
                [
                    (
                        "the kettle whistles in the kitchen",
                        "the whistle perhaps makes the air vibrate strongly",
                        "A loud whistle might shake the air nearby.",
                    ),
                    (
                        "the whistle makes the air vibrate strongly",
                        "the vibration could stress the window glass",
                        "We believe sound waves may push on a thin pane.",
                    ),
                    (
                        "the vibration stresses the window glass",
                        "the kitchen window shatters",
                        "Glass under enough stress would break.",
                    ),
                ],
                omit_summary=True,
            ),
        ],
    ),
    dict(
        id="ex05-milk",
        direction="cause",
        context="The milk smelled sour.",
        candidates=(
            "The milk sat out of the fridge overnight.",
            "The milk was poured into a blue cup.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "the milk sits out of the fridge overnight",
                        "bacteria grow in the warm milk",
                        "Bacteria multiply quickly in warm milk.",
                    ),
                    (
                        "bacteria grow in the warm milk",
                        "the milk smells sour",
                        "Growing bacteria turn milk sour.",
                    ),
                ],
                "A warm night let bacteria grow and sour the milk.",
            ),
            R(
                [
                    (
                        "the milk is poured into a blue cup",
                        "the cup maybe carries traces of an older drink",
                        "A reused cup might hold leftover residue.",
                    ),
                    (
                        "the cup carries traces of an older drink",
                        "the residue possibly taints the fresh milk",
                        "Old residue could spoil new milk, we suspect.",
                    ),
                    (
                        "the residue taints the fresh milk",
                        "the milk smells sour",
                        "Tainted milk tends to smell sour.",
                    ),
                ],
                "Perhaps an unwashed cup tainted the milk and made it smell sour.",
            ),
        ],
    ),
    dict(
        id="ex06-alarm",
        direction="effect",
        context="The man forgot to set his alarm clock.",
        candidates=(
            "He was late for work.",
            "He won the office lottery.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "the man forgets to set his alarm clock",
                        "the man sleeps past his usual waking hour",
                        "Nothing wakes a sleeper without an alarm.",
                    ),
                    (
                        "the man sleeps past his usual waking hour",
                        "the man is late for work",
                        "Leaving home late makes a worker late.",
                    ),
                ],
                "Without the alarm he overslept and arrived late for work.",
            ),
            # chain breaks in the middle: the proof should fail
            R(
                [
                    (
                        "the man forgets to set his alarm clock",
                        "the whole morning drifts into an unplanned walk",
                        "A missed alarm might unmoor the day, we suppose.",
                    ),
                    (
                        "plain luck possibly favors a stray detour",
                        "he has won the office lottery",
                        "We imagine luck could strike anywhere at all.",
                    ),
                ],
                "Maybe the unplanned morning carried him toward a lucky ticket.",
            ),
        ],
    ),
    dict(
        id="ex07-ice",
        direction="effect",
        context="The road was covered in ice.",
        candidates=(
            "The car skidded at the corner.",
            "The driver sang along to the radio.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "the road is covered in ice",
                        "the car tires lose their grip on the road",
                        "Tires find little grip on icy ground.",
                    ),
                    (
                        "the car tires lose their grip on the road",
                        "the car skids at the corner",
                        "A car without grip slides in a turn.",
                    ),
                ],
                "Ice robbed the tires of grip, so the car skidded at the corner.",
            ),
            R(
                [
                    (
                        "the road is covered in ice",
                        "the driver possibly turns on the radio for traffic news",
                        "Drivers often check the radio in bad weather.",
                    ),
                    (
                        "the driver turns on the radio for traffic news",
                        "a favorite song maybe comes on the radio",
                        "Stations sometimes play familiar songs between reports.",
                    ),
                    ("garbled", "the radio kept playing regardless of the weather"),
                    (
                        "a favorite song comes on the radio",
                        "the driver sings along to the radio",
                        "People tend to sing along to songs they love.",
                    ),
                ],
                "Perhaps the icy commute put the radio on and the driver sang along.",
            ),
        ],
    ),
    dict(
        id="ex08-exam",
        direction="cause",
        context="The student passed the exam with a high grade.",
        candidates=(
            "The student studied the material every evening.",
            "The student wore a green sweater.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "the student studies the material every evening",
                        "the student masters the material before the exam",
                        "Regular study builds lasting knowledge.",
                    ),
                    (
                        "the student masters the material before the exam",
                        "the student passes the exam with a high grade",
                        "Strong knowledge earns a strong grade.",
                    ),
                ],
                "Nightly study built the mastery that earned the high grade.",
            ),
            R(
                [
                    (
                        "the student wears a green sweater",
                        "the student perhaps feels a little more confident",
                        "A lucky sweater might calm the nerves, the student believes.",
                    ),
                    (
                        "the student feels a little more confident",
                        "the student maybe guesses answers with less doubt",
                        "Confidence could reduce second-guessing.",
                    ),
                    (
                        "the student guesses answers with less doubt",
                        "the student passes the exam with a high grade",
                        "We assume confident guessing might luckily land on right answers.",
                    ),
                ],
                "Perhaps the lucky sweater steadied the student into a high grade.",
            ),
        ],
    ),
    dict(
        id="ex09-fire",
        direction="effect",
        context="Lightning struck the dry forest.",
        candidates=(
            "A wildfire spread through the trees.",
            "The squirrels learned a new dance.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "lightning strikes the dry forest",
                        "a flame starts in the dry undergrowth",
                        "A lightning bolt can ignite dry wood.",
                    ),
                    (
                        "a flame starts in the dry undergrowth",
                        "a wildfire spreads through the trees",
                        "Fire spreads fast through a dry forest.",
                    ),
                ],
                "The strike lit the dry undergrowth and the wildfire spread.",
            ),
            # chain breaks in the middle: the proof should fail; step 1 also
            # carries no assumption (parse warning)
            R(
                [
                    (
                        "lightning strikes the dry forest",
                        "a silver flash fills the evening sky",
                        "",
                    ),
                    (
                        "pure surprise maybe teaches small creatures odd habits",
                        "the squirrels learn a new dance",
                        "We suppose startled creatures might invent strange moves.",
                    ),
                ],
                "Perhaps the flash surprised the squirrels into something like a dance.",
            ),
        ],
    ),
    dict(
        id="ex10-bread",
        direction="cause",
        context="The bread turned green with mold.",
        candidates=(
            "The bread sat in a damp cupboard for weeks.",
            "The bread was sliced with a sharp knife.",
        ),
        gold=0,
        responses=[
            R(
                [
                    (
                        "the bread sits in a damp cupboard for weeks",
                        "mold spores settle and grow on the damp bread",
                        "Mold grows where food stays damp for long.",
                    ),
                    (
                        "mold spores settle and grow on the damp bread",
                        "the bread turns green with mold",
                        "Spreading mold colors bread green.",
                    ),
                ],
                "Weeks in a damp cupboard let mold cover the bread in green.",
            ),
            R(
                [
                    (
                        "the bread is sliced with a sharp knife",
                        "the knife perhaps carries crumbs from an older loaf",
                        "A used knife might hold traces of old food.",
                    ),
                    (
                        "the knife carries crumbs from an older loaf",
                        "old crumbs possibly seed the fresh slices with spores",
                        "We suspect stale crumbs could carry mold spores.",
                    ),
                    (
                        "old crumbs seed the fresh slices with spores",
                        "the bread turns green with mold",
                        "Seeded spores would spread given time.",
                    ),
                ],
                "Maybe a crumb-covered knife seeded the bread with mold.",
            ),
        ],
    ),
    # --- gold index 1 -------------------------------------------------------
    # flipped example: the distractor explanation is tighter than the gold one
    dict(
        id="ex11-dog",
        direction="cause",
        context="The dog barked at the front door.",
        candidates=(
            "The couch cushion was soft.",
            "A stranger knocked on the front door.",
        ),
        gold=1,
        responses=[
            R(
                [
                    (
                        "the couch cushion is soft",
                        "the dog sleeps deeply on the couch cushion",
                        "A soft cushion gives a dog deep sleep.",
                    ),
                    (
                        "the dog sleeps deeply on the couch cushion",
                        "the dog barks at the front door",
                        "A dog barks at the door the moment it wakes.",
                    ),
                ],
                "Deep sleep on the soft cushion ended with barking at the door.",
            ),
            R(
                [
                    (
                        "a stranger knocks on the front door",
                        "the knock perhaps echoes through the whole house",
                        "A firm knock might carry through every room.",
                    ),
                    (
                        "the knock echoes through the whole house",
                        "the dog possibly startles awake in the kitchen",
                        "Sudden sounds may startle a sleeping dog.",
                    ),
                    (
                        "the dog startles awake in the kitchen",
                        "the dog barks at the front door",
                        "A startled dog usually runs to the door and barks.",
                    ),
                ],
                "The stranger's knock probably startled the dog into barking at the door.",
            ),
        ],
    ),
    dict(
        id="ex12-phone",
        direction="cause",
        context="The phone battery died before noon.",
        candidates=(
            "The phone case was bright red.",
            "The screen ran at full brightness all morning.",
        ),
        gold=1,
        responses=[
            R(
                [
                    (
                        "the phone case is bright red",
                        "the owner perhaps notices the phone more often",
                        "A bright case might catch the eye, we think.",
                    ),
                    (
                        "the owner notices the phone more often",
                        "the owner maybe checks the phone again and again",
                        "Noticing a phone could invite extra checking.",
                    ),
                    (
                        "the owner checks the phone again and again",
                        "the phone battery dies before noon",
                        "We assume constant checking might drain a battery.",
                    ),
                ],
                "Perhaps the eye-catching case invited checking that drained the battery.",
            ),
            R(
                [
                    (
                        "the screen runs at full brightness all morning",
                        "the screen draws heavy power from the battery",
                        "A bright screen is the largest drain on a phone.",
                    ),
                    (
                        "the screen draws heavy power from the battery",
                        "the phone battery dies before noon",
                        "Heavy drain empties a battery in hours.",
                    ),
                ],
                "Full brightness drained the battery before noon.",
            ),
        ],
    ),
    dict(
        id="ex13-cake",
        direction="cause",
        context="The cake came out flat.",
        candidates=(
            "The oven door has a glass panel.",
            "The baker forgot to add baking powder.",
        ),
        gold=1,
        responses=[
            R(
                [
                    (
                        "the oven door has a glass panel",
                        "the baker possibly opens the door less while baking",
                        "A glass panel might tempt watching instead of opening.",
                    ),
                    (
                        "the baker opens the door less while baking",
                        "the oven heat maybe stays uneven near the glass",
                        "We suspect glass could leak heat unevenly.",
                    ),
                    (
                        "the oven heat stays uneven near the glass",
                        "the cake comes out flat",
                        "Uneven heat might stop a cake from rising, we guess.",
                    ),
                ],
                "Maybe uneven heat near the glass panel kept the cake flat.",
            ),
            R(
                [
                    (
                        "the baker forgets to add baking powder",
                        "no gas bubbles form in the cake dough",
                        "Baking powder is what makes dough form bubbles.",
                    ),
                    (
                        "no gas bubbles form in the cake dough",
                        "the cake comes out flat",
                        "Dough without bubbles cannot rise.",
                    ),
                ],
                "Without baking powder the dough never rose, so the cake was flat.",
            ),
        ],
    ),
    dict(
        id="ex14-traffic",
        direction="effect",
        context="A truck overturned on the highway.",
        candidates=(
            "The gas station lowered its prices.",
            "Traffic backed up for miles behind the crash.",
        ),
        gold=1,
        responses=[
            R(
                [
                    (
                        "a truck overturns on the highway",
                        "the highway perhaps stays quiet for some hours",
                        "Closures might reduce passing customers, we think.",
                    ),
                    (
                        "the highway stays quiet for some hours",
                        "the gas station maybe sells less fuel that day",
                        "Fewer cars could mean fewer fuel sales.",
                    ),
                    (
                        "the gas station sells less fuel that day",
                        "the gas station lowers its prices",
                        "We assume a slow day might push prices down.",
                    ),
                ],
                "Maybe the closed highway cut sales until the station lowered prices.",
            ),
            R(
                [
                    (
                        "a truck overturns on the highway",
                        "the crash blocks the highway lanes",
                        "An overturned truck blocks several lanes.",
                    ),
                    (
                        "the crash blocks the highway lanes",
                        "traffic backs up for miles behind the crash",
                        "Blocked lanes stack cars for miles.",
                    ),
                ],
                "The overturned truck blocked the lanes and traffic backed up for miles.",
            ),
        ],
    ),
    dict(
        id="ex15-sunburn",
        direction="effect",
        context="The swimmer stayed on the beach all afternoon without sunscreen.",
        candidates=(
            "The seagulls flew in circles.",
            "Her shoulders turned red and sore.",
        ),
        gold=1,
        responses=[
            # chain breaks in the middle: the proof should fail
            R(
                [
                    (
                        "the swimmer stays on the beach all afternoon",
                        "a lone towel marks her spot for hours",
                        "Beach visits might leave a towel out for hours.",
                    ),
                    (
                        "wheeling birds maybe trace loops above the sand",
                        "the seagulls fly in circles",
                        "We imagine looping flight looks like circling.",
                    ),
                ],
                "Perhaps the quiet beach drew wheeling birds overhead.",
            ),
            R(
                [
                    (
                        "the swimmer stays on the beach all afternoon with no sunscreen",
                        "the strong sun burns her bare shoulders",
                        "Hours of direct sun burn unprotected skin.",
                    ),
                    (
                        "the strong sun burns her bare shoulders",
                        "her shoulders turn red and sore",
                        "Burned skin turns red and sore.",
                    ),
                ],
                "An afternoon of direct sun left her shoulders red and sore.",
            ),
        ],
    ),
    dict(
        id="ex16-lamp",
        direction="cause",
        context="The lamp went dark.",
        candidates=(
            "The curtains were freshly washed.",
            "The bulb filament burned out.",
        ),
        gold=1,
        responses=[
            R(
                [
                    (
                        "the curtains are freshly washed",
                        "someone perhaps unplugged the lamp to move the curtains",
                        "Hanging curtains might require moving furniture and plugs.",
                    ),
                    (
                        "someone unplugged the lamp to move the curtains",
                        "the lamp possibly stays unplugged afterwards",
                        "We suppose a moved plug could be forgotten.",
                    ),
                    (
                        "the lamp stays unplugged afterwards",
                        "the lamp goes dark",
                        "An unplugged lamp gives no light.",
                    ),
                ],
                "Maybe the curtain washing left the lamp unplugged and dark.",
            ),
            R(
                [
                    (
                        "the bulb filament burns out",
                        "the lamp goes dark",
                        "A lamp cannot glow on a broken filament.",
                    )
                ],
                "The burned-out filament left the lamp dark.",
            ),
        ],
    ),
    dict(
        id="ex17-river",
        direction="effect",
        context="Weeks of drought dried the river bed.",
        candidates=(
            "The town painted its fences white.",
            "The fish in the river died.",
        ),
        gold=1,
        responses=[
            # chain breaks in the middle: the proof should fail
            R(
                [
                    (
                        "weeks of drought dry the river bed",
                        "dust settles over the empty channel",
                        "A dry spell might coat everything in dust.",
                    ),
                    (
                        "fresh paint possibly brightens tired wood",
                        "the town paints its fences white",
                        "We suppose a tidy town could repaint on a whim.",
                    ),
                ],
                "Maybe the dusty season nudged the town toward fresh paint.",
            ),
            R(
                [
                    (
                        "weeks of drought dry the river bed",
                        "the water disappears from the river",
                        "A dry bed means the water is gone.",
                    ),
                    (
                        "the water disappears from the river",
                        "the fish in the river die",
                        "Fish cannot live out of water.",
                    ),
                ],
                "When the drought took the water, the fish in the river died.",
            ),
        ],
    ),
    dict(
        id="ex18-keys",
        direction="cause",
        context="The man could not open his front door.",
        candidates=(
            "The mailbox was full of letters.",
            "He left his keys at the office.",
        ),
        gold=1,
        responses=[
            R(
                [
                    (
                        "the mailbox is full of letters",
                        "the man perhaps stops to empty the mailbox first",
                        "A full mailbox might demand attention at the door.",
                    ),
                    (
                        "the man stops to empty the mailbox first",
                        "his hands maybe stay full of letters at the door",
                        "Armfuls of letters could occupy both hands.",
                    ),
                    (
                        "his hands stay full of letters at the door",
                        "the man cannot open his front door",
                        "We suppose full hands might make the lock awkward.",
                    ),
                ],
                "Maybe the overflowing mailbox kept his hands too full for the door.",
            ),
            R(
                [
                    (
                        "the man leaves his keys at the office",
                        "the man arrives home with no keys to the lock",
                        "Keys left behind cannot be in a pocket at home.",
                    ),
                    (
                        "the man arrives home with no keys to the lock",
                        "the man cannot open his front door",
                        "A locked door needs its key.",
                    ),
                ],
                "With the keys at the office, the front door stayed locked.",
            ),
        ],
    ),
    dict(
        id="ex19-coffee",
        direction="effect",
        context="She drank three cups of strong coffee at midnight.",
        candidates=(
            "Her bookshelf was alphabetized.",
            "She could not fall asleep until dawn.",
        ),
        gold=1,
        responses=[
            # chain breaks in the middle: the proof should fail
            R(
                [
                    (
                        "she drinks three cups of strong coffee at midnight",
                        "restless energy hums through the small hours",
                        "Strong coffee might charge the night with energy.",
                    ),
                    (
                        "tidy habits possibly surface when sleep is far away",
                        "her bookshelf ends up alphabetized",
                        "We guess order could be a cure for restlessness.",
                    ),
                ],
                "Perhaps the wakeful night turned into tidying the bookshelf.",
            ),
            R(
                [
                    (
                        "she drinks three cups of strong coffee at midnight",
                        "the caffeine keeps her body alert deep into the night",
                        "Caffeine blocks the drowsiness signal for hours.",
                    ),
                    (
                        "the caffeine keeps her body alert deep into the night",
                        "she cannot fall asleep until dawn",
                        "An alert body resists sleep.",
                    ),
                ],
                "The midnight caffeine kept her alert until dawn.",
            ),
        ],
    ),
    # flipped example: the distractor explanation is tighter than the gold one
    dict(
        id="ex20-snow",
        direction="effect",
        context="Heavy snow fell on the town overnight.",
        candidates=(
            "The bakery sold more croissants.",
            "The schools closed in the morning.",
        ),
        gold=1,
        responses=[
            R(
                [
                    (
                        "heavy snow falls on the town overnight",
                        "the town wakes to buried roads and closed offices",
                        "Heavy snow keeps the town at home.",
                    ),
                    (
                        "the town wakes to buried roads and closed offices",
                        "the bakery sells more croissants",
                        "A town at home buys breakfast at the corner bakery.",
                    ),
                ],
                "The snowed-in town bought its breakfast at the bakery.",
            ),
            R(
                [
                    (
                        "heavy snow falls on the town overnight",
                        "the plows perhaps cannot clear the roads by dawn",
                        "A whole night of snow may outpace the plows.",
                    ),
                    (
                        "the plows cannot clear the roads by dawn",
                        "the school buses possibly cannot run their routes",
                        "Buses might not run on buried roads.",
                    ),
                    (
                        "the school buses cannot run their routes",
                        "the schools close in the morning",
                        "Schools usually close when the buses stay parked.",
                    ),
                ],
                "The snow probably stopped the buses until the schools closed.",
            ),
        ],
    ),
]

# two raters choosing a candidate per example; mostly but not fully aligned
RATER_A_FLIPS = {"ex03-flood", "ex17-river"}
RATER_B_FLIPS = {"ex03-flood", "ex07-ice", "ex19-coffee"}

# ---------------------------------------------------------------------------
# noun lexicon: lemma list covering the corpus; plurals generated
# ---------------------------------------------------------------------------

NOUN_LEMMAS = """
afternoon air alarm animal answer balloon bacteria baker bakery battery beach
bed bird bolt book bookshelf branch bread breakfast breeze bubble bucket bulb
bus cake car case chair channel chore circle city clock coffee corner couch
creature croissant crumb cup cupboard cure curtain customer dance dawn day
detour dog door dough downpour drain drink driver drought dust energy evening
exam eye fence filament film fire fish flame food football forest fridge
friction front fuel furniture garden gardener gas glass grade grip gull habit
hand hat heat highway hole hour house ice impact key kiosk kitchen knife knock
lamp lane leak leg letter light lightning lock loaf loop lottery luck mailbox
market material midnight mile milk moisture mold morning move needle neighbor
nerve news night noise noon office order oven owner paint panel pane pattern
pavement people person phone plant plow plug pocket powder power price project
puddle rain ray residue river road roof root route routine rubber sand
schedule school screen seagull sheet shop shoulder sign skin sky sleep sleeper
slice snack snow soil song spell spore spot station storm stranger street
stress student summer sun sunscreen surprise sweater task ticket tire towel
town traffic tree truck undergrowth vibration visit volume walk water wave
weather week whim whistle wildfire window wood work worker pressure
""".split()

IRREGULAR_NOUNS = {
    "people": "person",
    "bacteria": "bacteria",
    "children": "child",
    "feet": "foot",
    "fish": "fish",
    "leaves": "leaf",
    "lives": "life",
    "men": "man",
    "teeth": "tooth",
    "women": "woman",
    "man": "man",
    "woman": "woman",
    "child": "child",
    "foot": "foot",
    "leaf": "leaf",
    "life": "life",
    "tooth": "tooth",
}


def build_noun_lexicon() -> dict[str, str]:
    lexicon = dict(IRREGULAR_NOUNS)
    for lemma in NOUN_LEMMAS:
        lexicon[lemma] = lemma
        if lemma.endswith("y") and lemma[-2] not in "aeiou":
            lexicon[lemma[:-1] + "ies"] = lemma
        elif lemma.endswith(("s", "sh", "ch", "x", "z")):
            lexicon[lemma + "es"] = lemma
        else:
            lexicon[lemma + "s"] = lemma
    return lexicon


# ---------------------------------------------------------------------------
# toy embedding table: stem-anchored deterministic vectors
#
# Inflected forms of one stem stay highly similar; unrelated stems are nearly
# orthogonal (the dimension keeps the noise floor well under the solver's
# acceptance threshold). Function words get small norms so shared articles do
# not fake topical similarity between phrases.
# ---------------------------------------------------------------------------

EMBEDDING_DIM = 256
STEM_WEIGHT = 1.0
FORM_WEIGHT = 0.18
FUNCTION_WORD_NORM = 0.25

FUNCTION_WORDS = set(
    """a an the this that these those it its they them he she his her hers
    their our your my i we you is are was were be been being am do does did
    done has have had having will would shall should can could may might must
    of in on at by for with from to into onto over under about as and or but
    if then than because so very too also just only even still yet when while
    after before during again more most some any all both each few such own
    same other another not no once there here what which who whom whose why
    how out up down off cannot without nothing none nobody neither nor never
    """.split()
)

IRREGULAR_VERB_STEMS = {
    "came": "com",
    "drank": "drink",
    "dried": "dry",
    "fell": "fall",
    "flew": "fly",
    "forgot": "forget",
    "left": "leav",
    "sat": "sit",
    "sold": "sell",
    "struck": "strik",
    "studied": "study",
    "went": "go",
    "woke": "wak",
    "won": "win",
}


def word_stem(token: str) -> str:
    if token in IRREGULAR_VERB_STEMS:
        return IRREGULAR_VERB_STEMS[token]
    if token in IRREGULAR_NOUNS:
        return IRREGULAR_NOUNS[token]
    stem = token
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("ing") and len(token) > 5:
        stem = token[:-3]
    elif token.endswith("ed") and len(token) > 4:
        stem = token[:-2]
    elif token.endswith("es") and len(token) > 4 and token[-3] in "sxzh":
        stem = token[:-2]
    elif token.endswith("s") and len(token) > 3 and not token.endswith("ss"):
        stem = token[:-1]
    if len(stem) > 3 and stem[-1] == stem[-2] and stem[-1] not in "aeiouls":
        stem = stem[:-1]  # undo consonant doubling: dropped -> drop
    if stem.endswith("e") and len(stem) > 3:
        stem = stem[:-1]  # deflate/deflated/deflates all land on deflat
    return stem


def seeded_gaussian(label: str) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:4], "big")
    return np.random.RandomState(seed).standard_normal(EMBEDDING_DIM)


def token_embedding(token: str) -> np.ndarray:
    vec = STEM_WEIGHT * seeded_gaussian("stem:" + word_stem(token))
    vec += FORM_WEIGHT * seeded_gaussian("form:" + token)
    vec = vec / np.linalg.norm(vec)
    if token in FUNCTION_WORDS:
        vec = vec * FUNCTION_WORD_NORM
    return vec


def collect_vocabulary() -> set[str]:
    vocab: set[str] = set()
    for example in CORPUS:
        vocab |= set(tokenize(example["context"]))
        for candidate in example["candidates"]:
            vocab |= set(tokenize(candidate))
        for response in example["responses"]:
            for step in response["steps"]:
                for part in step:
                    vocab |= set(tokenize(part))
            if response["summary"]:
                vocab |= set(tokenize(response["summary"]))
    return vocab


def write_embedding_table(vocab: set[str], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"d={EMBEDDING_DIM}\n")
        for token in sorted(vocab):
            values = " ".join(f"{v:.6f}" for v in token_embedding(token))
            fh.write(f"{token} {values}\n")


# ---------------------------------------------------------------------------
# response rendering and transcript recording
# ---------------------------------------------------------------------------

def render_response(example: dict, candidate_index: int) -> str:
    response = example["responses"][candidate_index]
    if example["direction"] == "cause":
        premise = example["candidates"][candidate_index]
        conclusion = example["context"]
    else:
        premise = example["context"]
        conclusion = example["candidates"][candidate_index]
    lines = [f"Premise: {premise}", f"Conclusion: {conclusion}"]
    number = 0
    for step in response["steps"]:
        number += 1
        if step[0] == "garbled":
            lines.append(f"Step {number}: {step[1]}.")
            continue
        if_clause, then_clause, assumption = step
        lines.append(f"Step {number}: IF {if_clause}, THEN {then_clause}.")
        if assumption:
            lines.append(f"Assumption: {assumption}")
    if not response["omit_summary"]:
        lines.append(f"Summary: {response['summary']}")
    return "\n".join(lines)


def build_examples() -> list[CqaExample]:
    return [
        CqaExample(
            id=e["id"],
            context=e["context"],
            direction=Direction(e["direction"]),
            candidates=tuple(e["candidates"]),
            gold_index=e["gold"],
            source=Source.CUSTOM,
        )
        for e in CORPUS
    ]


def record_transcripts(examples: list[CqaExample], path: Path) -> None:
    if path.exists():
        path.unlink()
    store = TranscriptStore(path, StoreMode.RECORD)
    responses = {}
    for spec, example in zip(CORPUS, examples):
        for index in range(len(example.candidates)):
            prompt = build_explanation_prompt(example, index)
            responses[prompt] = render_response(spec, index)
    client = ScriptedClient(responses, match="exact")
    for example in examples:
        for index in range(len(example.candidates)):
            request = LlmRequest(model=MODEL_NAME, prompt=build_explanation_prompt(example, index))
            store.fetch(request, client)
    print(f"recorded {len(store)} transcripts -> {path}")


def write_annotations(examples: list[CqaExample], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["example_id", "rater_a", "rater_b"])
        for example in examples:
            a = example.gold_index ^ (1 if example.id in RATER_A_FLIPS else 0)
            b = example.gold_index ^ (1 if example.id in RATER_B_FLIPS else 0)
            writer.writerow([example.id, a, b])


# ---------------------------------------------------------------------------
# concept-drift fixture: 200 synthetic explanations with frozen drift values
# ---------------------------------------------------------------------------

DRIFT_VERBS = ["touches", "moves", "covers", "holds", "follows", "warms", "lifts", "shakes"]
DRIFT_FILLERS = ["slowly", "quietly", "again", "at once", "for a while", "without a sound"]


def generate_drift_cases(n: int = 200) -> list[dict]:
    import random as _random

    from ibe_eval.generation import parse_explanation_response  # local import for clarity
    from ibe_eval.metrics import concept_drift
    from ibe_eval.model import EntailmentHypothesis, ExplanationStep, StructuredExplanation
    from ibe_eval.scorers import FallbackPosTagger, load_noun_lexicon

    rng = _random.Random(20240)
    nouns = sorted(NOUN_LEMMAS)
    tagger = FallbackPosTagger(load_noun_lexicon(DATA / "nouns.tsv"))

    def sentence() -> str:
        pattern = rng.randrange(3)
        a, b = rng.choice(nouns), rng.choice(nouns)
        verb = rng.choice(DRIFT_VERBS)
        if pattern == 0:
            return f"the {a} {verb} the {b}"
        if pattern == 1:
            return f"the {a} {verb} {rng.choice(DRIFT_FILLERS)}"
        return f"a {a} near the {b} {verb} the {rng.choice(nouns)}"

    cases = []
    for _ in range(n):
        hypothesis = EntailmentHypothesis(
            example_id="drift", candidate_index=0, premise=sentence(), conclusion=sentence()
        )
        steps = tuple(
            ExplanationStep(
                index=i + 1,
                if_clause=sentence(),
                then_clause=sentence(),
                assumption=sentence() if rng.random() < 0.7 else "",
            )
            for i in range(rng.randint(1, 4))
        )
        explanation = StructuredExplanation(
            hypothesis=hypothesis,
            steps=steps,
            summary=sentence() if rng.random() < 0.8 else "",
            raw_response="",
        )
        cases.append(
            {
                "hypothesis": hypothesis.to_dict(),
                "explanation": explanation.to_dict(),
                "expected_drift": concept_drift(hypothesis, explanation, tagger),
            }
        )
    return cases


def write_prompt_goldens() -> None:
    from ibe_eval.formalize import build_formalization_prompt
    from ibe_eval.generation import parse_explanation_response

    examples = build_examples()
    prompt = build_explanation_prompt(examples[0], 0)
    (FIXTURES / "golden_prompt.txt").write_text(prompt, encoding="utf-8", newline="\n")

    response = render_response(CORPUS[0], 0)
    from ibe_eval.generation import to_eev

    explanation = parse_explanation_response(response, to_eev(examples[0], 0))
    formalize_prompt = build_formalization_prompt(explanation.hypothesis, explanation)
    (FIXTURES / "golden_formalize_prompt.txt").write_text(
        formalize_prompt, encoding="utf-8", newline="\n"
    )


# ---------------------------------------------------------------------------
# golden run
# ---------------------------------------------------------------------------

GOLDEN_FILES = [
    "dataset.jsonl",
    "explanations.jsonl",
    "programs.jsonl",
    "proofs.jsonl",
    "features.jsonl",
    "model.json",
    "selections.jsonl",
    "report/summary.json",
    "report/ablation.csv",
    "report/regression.json",
    "report/hedges.csv",
    "report/directions.csv",
    "report/agreement.json",
]


def run_golden(tmp_root: Path) -> Path:
    config = PipelineConfig(
        dataset_path=FIXTURES / "corpus20.jsonl",
        dataset_format="canonical",
        transcript_path=FIXTURES / "transcripts20.jsonl",
        transcript_mode="replay",
        model=MODEL_NAME,
        output_dir=tmp_root,
        annotations_path=FIXTURES / "annotations.csv",
    )
    runner = StageRunner(config)
    runner.run_all()
    return runner.run_dir


# candidates whose broken chains must fail the proof
EXPECT_INCONSISTENT = {
    ("ex06-alarm", 1),
    ("ex09-fire", 1),
    ("ex15-sunburn", 0),
    ("ex17-river", 0),
    ("ex19-coffee", 0),
}
# examples the fitted model is expected to get wrong (flipped fixtures)
EXPECT_WRONG = {"ex03-flood", "ex11-dog", "ex20-snow"}
EXPECT_SELF_EVIDENT = ["ex01-balloon/0", "ex16-lamp/1"]


def verify(run_dir: Path) -> None:
    features = read_jsonl(run_dir / "features.jsonl")
    summary = json.loads((run_dir / "report" / "summary.json").read_text())

    inconsistent = {
        (r["example_id"], r["candidate_index"])
        for r in features
        if r["features"]["consistency"] == 0
    }
    assert inconsistent == EXPECT_INCONSISTENT, f"inconsistent set drifted: {sorted(inconsistent)}"
    assert summary["self_evident"]["flagged"] == EXPECT_SELF_EVIDENT, summary["self_evident"]
    wrong = {
        r["example_id"] for r in read_jsonl(run_dir / "selections.jsonl") if not r["correct"]
    }
    assert wrong == EXPECT_WRONG, f"misclassified set drifted: {sorted(wrong)}"
    assert summary["accuracy"] == 17 / 20, summary["accuracy"]

    ablation_csv = (run_dir / "report" / "ablation.csv").read_text().splitlines()
    random_row = next(line for line in ablation_csv if ",random," in line)
    assert random_row.endswith(",0.5"), random_row

    print(f"accuracy: {summary['accuracy']}")
    print(f"by direction: {summary['by_direction']}")
    print(f"self-evident: {summary['self_evident']['flagged']}")
    consistent = sum(r["features"]["consistency"] for r in features)
    print(f"consistent: {consistent}/{len(features)}")
    for label in (1, 0):
        rows = [r for r in features if r["label"] == label]
        mean = lambda key: sum(r["features"][key] for r in rows) / len(rows)  # noqa: E731
        print(
            f"label={label}: depth={mean('depth'):.2f} drift={mean('drift'):.2f} "
            f"coherence={mean('coherence'):.3f} uncertainty={mean('uncertainty'):.2f}"
        )


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    examples = build_examples()

    dump_canonical(examples, FIXTURES / "corpus20.jsonl")
    assert load_canonical(FIXTURES / "corpus20.jsonl") == examples
    golds = [e.gold_index for e in examples]
    assert sum(golds) == 10, f"corpus must be gold-balanced, got {sum(golds)}/20 ones"
    print(f"wrote corpus: 20 examples, {sum(golds)} gold-1")

    lexicon = build_noun_lexicon()
    with open(DATA / "nouns.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# noun lexicon: token<TAB>lemma\n")
        for token in sorted(lexicon):
            fh.write(f"{token}\t{lexicon[token]}\n")
    print(f"wrote noun lexicon: {len(lexicon)} entries")

    vocab = collect_vocabulary()
    write_embedding_table(vocab, DATA / "embeddings_toy.txt")
    print(f"wrote embedding table: {len(vocab)} tokens, d={EMBEDDING_DIM}")

    record_transcripts(examples, FIXTURES / "transcripts20.jsonl")
    write_annotations(examples, FIXTURES / "annotations.csv")
    write_prompt_goldens()

    drift_cases = generate_drift_cases()
    with open(FIXTURES / "drift_cases.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(drift_cases, fh, ensure_ascii=False, sort_keys=True, indent=1)
        fh.write("\n")
    print(f"wrote {len(drift_cases)} drift cases")

    with tempfile.TemporaryDirectory() as tmp:
        run_dir = run_golden(Path(tmp))
        golden_dir = FIXTURES / "golden"
        if golden_dir.exists():
            shutil.rmtree(golden_dir)
        (golden_dir / "report").mkdir(parents=True)
        for name in GOLDEN_FILES:
            shutil.copy2(run_dir / name, golden_dir / name)
        verify(run_dir)
    print(f"golden artifacts -> {golden_dir}")


if __name__ == "__main__":
    main()
