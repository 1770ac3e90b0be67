# Copyright 2026 The dischargegen Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the deterministic fixture corpus used by the tests.

    python3 make_fixtures.py            # rewrites train.jsonl, pmh_example.txt, golden_note.txt
"""

import json
import pathlib
import random

HERE = pathlib.Path(__file__).resolve().parent
SEED = 20240601
VISITS = 24
LONG_VISITS = {"10005", "10012", "10020"}
MISSING = {
    "10004": {"Social History", "Family History"},
    "10007": {"Brief Hospital Course"},
    "10009": {"Major Surgical or Invasive Procedure", "Physical Exam"},
    "10013": {"Discharge Instructions"},
    "10016": {"Chief Complaint", "Medications on Admission"},
    "10019": {"Pertinent Results"},
    "10022": {"Family History", "Discharge Condition"},
}

PMH_EXAMPLE = (
    "- prior paramedian pontine infarct (___)\n"
    "- right-sided lenticulostriate territory infarct ___\n"
    "- Hypertension as per prior medical records(patient denies)\n"
    "- Dyslipidemia\n"
    "- Colon cancer 2/p right colectomy in ___ with prolonged\n"
    "stuttering course of adjuvant chemotherapy (diagnosed in setting\n"
    "of GI bleeding)\n"
    "- Cholecystectomy for chronic cholecystitis and gallstones in\n"
    "___\n"
    "- Diverticulosis\n"
    "- Hemorrhoids"
)

PROBLEMS = [
    {
        "cc": "Palpitations",
        "hpi": "reports two days of a racing heartbeat and lightheadedness. In the "
               "ED an EKG showed atrial fibrillation at 140 beats per minute",
        "exam": "Irregularly irregular rhythm, tachycardic, no murmurs appreciated",
        "labs": "Troponin negative on two draws. Potassium 3.6, magnesium 1.9. "
                "TSH within normal limits",
        "rad": "IMPRESSION: Mild cardiomegaly without pulmonary edema.",
        "ed": ("I4891", 10, "Unspecified atrial fibrillation"),
        "dx": "Atrial fibrillation with rapid ventricular response",
        "meds": ["Metoprolol succinate 100 mg PO DAILY", "Apixaban 5 mg PO BID"],
        "bhc": "#AF w/ RVR - rates to 140s on arrival. Rate ctrl achieved w/ IV then "
               "PO beta blocker, HR 70s-80s by HD2. CHA2DS2-VASc 3, started on DOAC "
               "after shared decision making.",
        "di": "You came in because your heart was beating fast and out of rhythm. "
              "We slowed it down with medicines and began a blood thinner to lower "
              "your risk of clots. Please do not skip doses of the blood thinner.",
    },
    {
        "cc": "Cough and fevers",
        "hpi": "developed a productive cough, fever to 101.8 and shortness of breath "
               "over four days. Chest x-ray in the ED showed a right lower lobe "
               "consolidation",
        "exam": "Crackles at the right base, decreased breath sounds, mild tachypnea",
        "labs": "White blood cell count 14.2 with neutrophilia. Lactate 1.8. Blood "
                "cultures without growth to date. Procalcitonin 0.9",
        "rad": "IMPRESSION: Right lower lobe consolidation concerning for pneumonia. "
               "Small right pleural effusion.",
        "ed": ("J189", 10, "Pneumonia, unspecified organism"),
        "dx": "Community acquired pneumonia",
        "meds": ["Levofloxacin 750 mg PO Q24H for 3 more days",
                 "Acetaminophen 650 mg PO Q6H PRN fever"],
        "bhc": "#CAP (RLL) - treated initially w/ CTX + azithro, narrowed to PO "
               "quinolone once afebrile x48h. O2 weaned to RA on HD3. Cx NGTD.",
        "di": "You were treated for a lung infection. Your breathing got better "
              "and you no longer needed extra air through your nose. Finish every "
              "dose of the antibiotic pills even if you feel well.",
    },
    {
        "cc": "Leg swelling",
        "hpi": "noted worsening bilateral leg swelling, orthopnea and a weight gain "
               "of eight pounds in the past two weeks after running out of "
               "furosemide",
        "exam": "JVP to the angle of the jaw, bibasilar crackles, 2+ lower extremity "
                "edema to the knees",
        "labs": "BNP 2350. Creatinine 1.5 from a baseline of 1.1. Sodium 133. "
                "Echocardiogram with ejection fraction 30 percent",
        "rad": "IMPRESSION: Pulmonary edema and bilateral pleural effusion. "
               "Cardiomegaly.",
        "ed": ("I5023", 10, "Acute on chronic systolic (congestive) heart failure"),
        "dx": "Acute on chronic systolic heart failure exacerbation",
        "meds": ["Furosemide 40 mg PO BID", "Lisinopril 10 mg PO DAILY",
                 "Metoprolol succinate 50 mg PO DAILY"],
        "bhc": "#HFrEF exacerbation, precipitated by diuretic nonadherence - IV "
               "diuresis w/ net neg ~4.5 L, dry wt 81 kg. GDMT resumed. Cr peaked "
               "1.6 then improved w/ decongestion.",
        "di": "Extra fluid built up in your body because your heart pump is weak. "
              "We removed the fluid with water pills given in the vein. Weigh "
              "yourself every morning and call your doctor if you gain 3 lbs.",
    },
    {
        "cc": "Abdominal pain",
        "hpi": "presents with crampy abdominal pain, nausea and vomiting, and no "
               "flatus for one day. CT abdomen showed dilated loops of small bowel "
               "with a transition point",
        "exam": "Distended abdomen, tympanic to percussion, diffusely tender without "
                "rebound",
        "labs": "Lactate 1.4. Lipase normal. Potassium 3.2 repleted with potassium "
                "chloride",
        "rad": "IMPRESSION: Small bowel obstruction with transition point in the "
               "right lower quadrant. No free air.",
        "ed": ("K5660", 10, "Unspecified intestinal obstruction"),
        "dx": "Adhesive small bowel obstruction",
        "meds": ["Ondansetron 4 mg PO Q8H PRN nausea"],
        "bhc": "#SBO, presumed adhesive - managed conservatively w/ NGT to LIWS, NPO "
               "and IVF. Passed flatus HD3, NGT pulled, diet advanced to regular "
               "which pt tolerated. Surgery followed, no OR.",
        "di": "Your intestine was blocked, most likely by scar tissue from a prior "
              "operation. It opened up on its own with bowel rest and a tube "
              "through the nose. Eat small meals for the next week.",
    },
    {
        "cc": "Fever and dysuria",
        "hpi": "reports burning with urination, flank discomfort and fever with "
               "rigors. Urinalysis in the ED was positive for leukocyte esterase "
               "and nitrites",
        "exam": "Right costovertebral angle tenderness, warm extremities, no rash",
        "labs": "White blood cell count 16.0. Lactate 2.6 improved to 1.2 after "
                "normal saline. Blood cultures grew E. coli",
        "rad": "IMPRESSION: No hydronephrosis. Normal renal ultrasound.",
        "ed": ("N390", 10, "Urinary tract infection, site not specified"),
        "dx": "Sepsis from pyelonephritis",
        "meds": ["Ciprofloxacin 500 mg PO Q12H for 10 days"],
        "bhc": "#Sepsis 2/2 E. coli pyelo - met SIRS w/ lactate 2.6, resuscitated "
               "w/ 2 L IVF. Abx tailored per sensitivities to cipro PO. BCx "
               "repeated and negative.",
        "di": "A kidney infection spread to your blood. You received fluids and "
              "antibiotics through the vein and are now able to take pills. Come "
              "back if you have shaking chills again.",
    },
    {
        "cc": "Dizziness",
        "hpi": "had a witnessed syncope while standing at church, preceded by "
               "nausea and diaphoresis, with prompt return to baseline. Head CT "
               "showed no acute process",
        "exam": "Orthostatic drop in blood pressure, otherwise non-focal neurologic "
                "examination",
        "labs": "Hemoglobin 13.1. Troponin negative. Telemetry without arrhythmia. "
                "Echocardiogram with normal valves",
        "rad": "IMPRESSION: No acute intracranial abnormality on ct head.",
        "ed": ("R55", 10, "Syncope and collapse"),
        "dx": "Vasovagal syncope with orthostatic hypotension",
        "meds": ["Amlodipine held", "Increase fluid intake to 2 liters daily"],
        "bhc": "#Syncope, likely vasovagal + orthostasis - tele w/o events x48h, "
               "TTE unremarkable. BP med dose reduced. PT cleared for home.",
        "di": "You fainted because of a reflex that briefly drops your pulse and "
              "blood pressure, made worse by low fluid intake. One blood pressure "
              "pill was paused. Stand up slowly.",
    },
    {
        "cc": "Black stools",
        "hpi": "noted melena for three days and fatigue while taking aspirin and "
               "warfarin. Hemoglobin in the ED was 7.1 from a baseline of 12",
        "exam": "Pale conjunctivae, melena on rectal examination, soft abdomen",
        "labs": "Hemoglobin 7.1 to 9.0 after two units. INR 3.4. Creatinine 1.0. "
                "Urea nitrogen elevated",
        "rad": "IMPRESSION: No acute cardiopulmonary process on chest x-ray.",
        "ed": ("K922", 10, "Gastrointestinal hemorrhage, unspecified"),
        "dx": "Upper GI bleeding from gastric ulcer",
        "meds": ["Pantoprazole 40 mg PO BID for 8 weeks"],
        "bhc": "#UGIB from gastric ulcer - EGD w/ clean-based ulcer, no stigmata. "
               "Transfused 2u pRBC, Hgb stable x24h. Anticoag held, INR reversed "
               "w/ vit K. PPI BID x8 wk, H pylori serology sent.",
        "di": "You lost blood from a sore in your stomach lining. A camera test "
              "found the sore and it was not actively oozing. Take the stomach "
              "acid medicine twice a day and stop the baby aspirin.",
    },
    {
        "cc": "Confusion",
        "hpi": "family noted two days of fluctuating confusion and poor oral "
               "intake. Sodium was 124 and there was concern for dehydration",
        "exam": "Inattentive, dry mucous membranes, no focal deficits, asterixis "
                "absent",
        "labs": "Sodium 124 corrected to 132. Serum osmolality low. Urine sodium "
                "under 20. Creatinine 1.3",
        "rad": "IMPRESSION: No acute process on mri brain.",
        "ed": ("E871", 10, "Hypo-osmolality and hyponatremia"),
        "dx": "Hypovolemic hyponatremia with delirium",
        "meds": ["Hydrochlorothiazide discontinued"],
        "bhc": "#Hypovolemic hypoNa, likely thiazide + poor PO - gentle IVF w/ Na "
               "correction < 8/24h, HCTZ stopped. Mental status back to baseline "
               "per family by HD3.",
        "di": "The salt level in your blood was too low, which made you confused. "
              "Your water pill for blood pressure caused part of this and has been "
              "stopped for good. Drink when thirsty.",
    },
]

CHRONIC = [
    ("Hypertension", "amlodipine 5 mg PO DAILY", "#HTN - home regimen continued."),
    ("Type 2 diabetes mellitus", "metformin 1000 mg PO BID",
     "#T2DM - ISS inpatient, home oral agent resumed at d/c."),
    ("Dyslipidemia", "atorvastatin 40 mg PO QPM", "#HLD - statin continued."),
    ("Chronic obstructive pulmonary disease", "albuterol inhaler PRN wheezing",
     "#COPD - stable, nebs PRN."),
    ("Anemia of chronic disease", "ferrous sulfate 325 mg PO DAILY",
     "#Chronic anemia - at baseline, no transfusion needed."),
]

EXAM_COMMON = [
    "Vitals - T 98.4 HR 92 BP 128/74 RR 18 SpO2 95% on room air.",
    "General - alert and oriented, lying in bed, no acute distress.",
    "HEENT - sclera anicteric, mucous membranes moist, oropharynx clear.",
    "Neck - supple, no lymphadenopathy.",
    "Lungs - breathing comfortably, no wheezes or rhonchi.",
    "Abdomen - soft, bowel sounds present, no hepatosplenomegaly.",
    "Extremities - warm and well perfused, pulses 2+ bilaterally.",
    "Skin - no rashes or ulcers.",
    "Neuro - cranial nerves II through XII grossly intact, moving all limbs.",
]

DISPOSITIONS = ["Home", "Home With Service", "Extended Care"]
SOCIAL = ["Lives with spouse, retired teacher. Former smoker, quit 20 years ago.",
          "Lives alone in an apartment. Occasional alcohol, no drug use.",
          "Lives with daughter. Never smoker. Walks with a cane."]
FAMILY = ["Mother with coronary disease in her 70s. Father with stroke.",
          "Noncontributory.",
          "Brother with type 2 diabetes. No family history of cancer."]
PROCEDURES = ["None", "Esophagogastroduodenoscopy", "Peripherally inserted central catheter placement"]


def lab_line(rng, day):
    return (f"___ 06:{rng.randint(10, 59):02d}AM BLOOD WBC-{rng.uniform(4, 16):.1f} "
            f"RBC-{rng.uniform(3, 5):.2f} Hgb-{rng.uniform(7, 15):.1f} "
            f"Hct-{rng.uniform(22, 45):.1f} MCV-{rng.randint(78, 99)} "
            f"Plt-{rng.randint(120, 420)} Glucose-{rng.randint(70, 210)} "
            f"UreaN-{rng.randint(8, 40)} Creat-{rng.uniform(0.6, 2.0):.1f} "
            f"Na-{rng.randint(128, 145)} K-{rng.uniform(3.1, 5.2):.1f} "
            f"Cl-{rng.randint(95, 110)} HCO3-{rng.randint(18, 30)} "
            f"AnGap-{rng.randint(8, 18)} day{day}")


def make_visit(index, rng):
    hadm_id = str(10001 + index)
    main = PROBLEMS[index % len(PROBLEMS)]
    chronic = rng.sample(CHRONIC, 2)
    age = rng.randint(45, 89)
    sex = rng.choice(["man", "woman"])
    long_note = hadm_id in LONG_VISITS

    sections = {}
    sections["Chief Complaint"] = main["cc"]
    sections["Major Surgical or Invasive Procedure"] = rng.choice(PROCEDURES)
    sections["History of Present Illness"] = (
        f"Patient is a {age} year old {sex} with {chronic[0][0].lower()} and "
        f"{chronic[1][0].lower()} who {main['hpi']}. Denies recent travel or "
        f"sick contacts. Review of systems otherwise negative.")
    if index == 0:
        sections["Past Medical History"] = PMH_EXAMPLE
    else:
        sections["Past Medical History"] = "\n".join(f"- {c[0]}" for c in chronic)
    sections["Social History"] = rng.choice(SOCIAL)
    sections["Family History"] = rng.choice(FAMILY)
    exam = list(EXAM_COMMON)
    exam.insert(rng.randint(1, len(exam)), f"Focused - {main['exam']}.")
    sections["Physical Exam"] = "\n".join(exam)
    days = 170 if long_note else 4
    labs = [lab_line(rng, d + 1) for d in range(days)]
    sections["Pertinent Results"] = "\n".join(labs) + "\n" + main["labs"] + "."
    sections["Brief Hospital Course"] = "\n".join(
        [main["bhc"]] + [c[2] for c in chronic] +
        ([f"Daily chemistries trended (see labs). Day {d} unremarkable otherwise, "
          f"plan reviewed w/ pt at bedside." for d in range(1, 60)]
         if long_note else []))
    sections["Medications on Admission"] = "\n".join(
        f"{i + 1}. {c[1]}" for i, c in enumerate(chronic))
    meds = main["meds"] + [c[1][0].upper() + c[1][1:] for c in chronic]
    sections["Discharge Medications"] = "\n".join(f"{i + 1}. {m}" for i, m in enumerate(meds))
    sections["Discharge Disposition"] = rng.choice(DISPOSITIONS)
    sections["Discharge Diagnosis"] = (
        f"Primary diagnosis - {main['dx']}\nSecondary diagnoses - "
        f"{chronic[0][0]}, {chronic[1][0]}")
    sections["Discharge Condition"] = (
        "Mental Status - Clear and coherent.\n"
        "Level of Consciousness - Alert and interactive.\n"
        "Activity Status - Ambulatory, independent.")
    sections["Discharge Instructions"] = (
        f"Dear {'Mr.' if sex == 'man' else 'Ms.'} ___,\n\n"
        f"Thank you for letting us look after you. {main['di']}\n\n"
        "With best wishes,\nYour care team")

    for name in MISSING.get(hadm_id, ()):
        del sections[name]

    preamble = (f"Name:  ___                 Unit No:   ___\n\n"
                f"Admission Date:  ___              Discharge Date:   ___\n\n"
                f"Sex:   {'M' if sex == 'man' else 'F'}\n\n"
                f"Service: MEDICINE\n\nAllergies: \nNo Known Allergies / Adverse Drug Reactions\n\n")
    body = "".join(f"{name}:\n{text}\n\n" for name, text in sections.items())
    note = preamble + body + "Followup Instructions:\n___\n"

    reports = [f"EXAMINATION:  Imaging study {j + 1}\n\nINDICATION:  ___ year old with "
               f"{main['cc'].lower()}.\n\nFINDINGS:  Study reviewed in detail, lines "
               f"and tubes none.\n\n{main['rad']}" for j in range(1 + index % 2)]
    code, version, title = main["ed"]
    diagnoses = [{"icd_code": code, "icd_version": version, "long_title": title}]
    if index % 3 == 0:
        diagnoses.append({"icd_code": "I10", "icd_version": 10,
                          "long_title": "Essential (primary) hypertension"})
    if index % 5 == 0:
        diagnoses.append(dict(diagnoses[0]))
    return {
        "hadm_id": hadm_id,
        "note_text": note,
        "radiology_reports": reports,
        "ed_diagnoses": diagnoses,
        "chief_complaint_ed": None if index % 4 == 3 else main["cc"],
    }


def main():
    rng = random.Random(SEED)
    visits = [make_visit(i, rng) for i in range(VISITS)]
    with open(HERE / "train.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for v in visits:
            f.write(json.dumps(v, ensure_ascii=False) + "\n")
    (HERE / "pmh_example.txt").write_text(PMH_EXAMPLE, encoding="utf-8")
    golden = visits[0]["note_text"].removesuffix("Followup Instructions:\n___\n")
    (HERE / "golden_note.txt").write_text(golden, encoding="utf-8")


if __name__ == "__main__":
    main()
