import math

from django import forms

from .services.exceptions import SpecError
from .services.runner import SUBCOMMANDS, RunConfig
from .services.specs import GALLERY_PREFIX, parse_params
from .services.step_integral import MODES


class RunConfigForm(forms.Form):
    """Validates the options of one command-line run"""

    subcommand = forms.ChoiceField(choices=[(s, s) for s in SUBCOMMANDS])

    # Input: a spec file path, or a gallery id
    spec = forms.CharField(required=False)
    gallery = forms.CharField(required=False)
    params = forms.CharField(required=False, help_text='key=value pairs separated by commas')

    # Accuracy and budgets
    tol = forms.FloatField(min_value=0.0)
    budget = forms.IntegerField(min_value=1, required=False)
    eps_levels = forms.IntegerField(min_value=1, required=False)
    max_iter = forms.IntegerField(min_value=1, required=False, initial=200)
    eps = forms.FloatField(required=False)

    MODE_CHOICES = [(m, m) for m in MODES]
    mode = forms.ChoiceField(choices=MODE_CHOICES, required=False, initial='hl')
    interval = forms.CharField(required=False, help_text='two numbers, b may be inf')
    grid = forms.IntegerField(min_value=2, required=False, initial=33)
    per_layer = forms.IntegerField(min_value=1, required=False, initial=16)
    scales = forms.CharField(required=False, help_text='exponents k of the gauge scales 2^-k')
    seed = forms.IntegerField(required=False)

    # Outputs
    output = forms.CharField(required=False)
    csv = forms.CharField(required=False)
    FORMAT_CHOICES = [('json', 'json'), ('csv', 'csv')]
    format = forms.ChoiceField(choices=FORMAT_CHOICES, required=False, initial='json')

    def clean_tol(self):
        tol = self.cleaned_data['tol']
        if not tol > 0:
            raise forms.ValidationError('Tolerance must be positive.')
        return tol

    def clean_eps(self):
        eps = self.cleaned_data.get('eps')
        if eps is not None and not eps > 0:
            raise forms.ValidationError('eps must be positive.')
        return eps

    def clean_params(self):
        try:
            return parse_params(self.cleaned_data.get('params'))
        except SpecError as exc:
            raise forms.ValidationError(str(exc))

    def clean_interval(self):
        text = (self.cleaned_data.get('interval') or '').strip()
        if not text:
            return None
        parts = text.replace(',', ' ').split()
        if len(parts) != 2:
            raise forms.ValidationError('Give the interval as two numbers a b.')
        try:
            a, b = (float(p) for p in parts)
        except ValueError:
            raise forms.ValidationError(f"Bad interval '{text}'.")
        if math.isnan(a) or math.isnan(b) or not math.isfinite(a) or not a < b:
            raise forms.ValidationError(f"Need a finite a below b, got [{a}, {b}].")
        return a, b

    def clean_scales(self):
        text = (self.cleaned_data.get('scales') or '').strip()
        if not text:
            return (4, 6, 8)
        try:
            scales = tuple(int(p) for p in text.replace(',', ' ').split())
        except ValueError:
            raise forms.ValidationError(f"Bad scales '{text}'.")
        if not scales or any(k < 0 for k in scales):
            raise forms.ValidationError('Scales are natural numbers.')
        return scales

    def clean(self):
        cleaned = super().clean()
        spec, entry = cleaned.get('spec'), cleaned.get('gallery')
        if bool(spec) == bool(entry):
            raise forms.ValidationError('Give exactly one of a spec file or a gallery id.')
        if entry:
            cleaned['source'] = entry if entry.startswith(GALLERY_PREFIX) else GALLERY_PREFIX + entry
        else:
            cleaned['source'] = spec
        return cleaned

    def to_run_config(self):
        data = self.cleaned_data
        return RunConfig(
            subcommand=data['subcommand'],
            source=data['source'],
            params=data['params'],
            tol=data['tol'],
            budget=data.get('budget'),
            eps_levels=data.get('eps_levels'),
            max_iter=data.get('max_iter') or 200,
            mode=data.get('mode') or 'hl',
            interval=data.get('interval'),
            grid=data.get('grid') or 33,
            per_layer=data.get('per_layer') or 16,
            scales=data['scales'],
            eps=data.get('eps'),
            seed=data.get('seed'),
            output=data.get('output') or None,
            csv=data.get('csv') or None,
            format=data.get('format') or 'json',
        )
