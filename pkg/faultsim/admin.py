from django.contrib import admin

from .models import Campaign, ShotRecord


class ShotRecordInline(admin.TabularInline):
    model = ShotRecord
    extra = 0
    can_delete = False
    readonly_fields = [f.name for f in ShotRecord._meta.fields]


@admin.register(Campaign)
class CampaignAdmin(admin.ModelAdmin):
    list_display = ['title', 'scenarios', 'seed', 'date_run']
    readonly_fields = ['slug', 'seed', 'config', 'date_run']
    inlines = [ShotRecordInline]


@admin.register(ShotRecord)
class ShotRecordAdmin(admin.ModelAdmin):
    list_display = ['campaign', 'scenario', 'freq_mhz', 'input_bit', 'objective', 'power_pct', 'duration_ns',
                    'fault_class', 'burst_len', 'repeatability']
    list_filter = ['fault_class', 'scenario', 'objective']
